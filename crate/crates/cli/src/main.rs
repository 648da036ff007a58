fn main() {
    std::process::exit(slowlight_cli::run(std::env::args_os()));
}
