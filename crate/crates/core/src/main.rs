fn main() {
    std::process::exit(soilvwc::cli::run(std::env::args_os()));
}
