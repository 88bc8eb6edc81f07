fn main() {
    std::process::exit(bigframe::cli::run(std::env::args_os()));
}
