fn main() {
    std::process::exit(lrmr_cli::run(std::env::args_os()));
}
