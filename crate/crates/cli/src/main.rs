fn main() {
    std::process::exit(mlpcast_cli::run(std::env::args_os()));
}
