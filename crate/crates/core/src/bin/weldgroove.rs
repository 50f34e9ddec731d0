fn main() {
    std::process::exit(weldgroove::cli::run(std::env::args_os()));
}
