fn main() {
    std::process::exit(agenet::cli::run(std::env::args_os()));
}
