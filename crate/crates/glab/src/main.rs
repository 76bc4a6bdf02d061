fn main() {
    std::process::exit(glab::cli::run(std::env::args_os()));
}
