fn main() {
    std::process::exit(emden::cli::run(std::env::args_os()));
}
