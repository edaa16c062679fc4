fn main() {
    std::process::exit(sysid::cli::run(std::env::args_os()));
}
