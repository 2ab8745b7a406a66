fn main() {
    std::process::exit(drlbp_cli::commands::run(std::env::args_os()));
}
