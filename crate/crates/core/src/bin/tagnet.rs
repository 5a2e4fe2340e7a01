fn main() {
    std::process::exit(tagnet::cli::run(std::env::args_os()));
}
