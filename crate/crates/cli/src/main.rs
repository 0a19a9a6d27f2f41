fn main() {
    std::process::exit(pvt_cli::run(std::env::args_os()));
}
