fn main() {
    std::process::exit(lssan::cli::run(std::env::args_os()));
}
