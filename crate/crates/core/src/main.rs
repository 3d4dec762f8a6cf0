fn main() {
    std::process::exit(opinionforge::cli::run(std::env::args_os()));
}
