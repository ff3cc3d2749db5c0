fn main() {
    std::process::exit(eucl::cli::run(std::env::args_os()));
}
