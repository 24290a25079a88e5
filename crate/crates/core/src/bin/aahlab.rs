fn main() {
    std::process::exit(aahlab::cli::run(std::env::args_os()));
}
