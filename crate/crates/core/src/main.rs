fn main() {
    std::process::exit(eit_cool::cli::run(std::env::args_os()));
}
