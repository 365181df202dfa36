fn main() {
    std::process::exit(diracwv::cli::main_with_args(std::env::args_os()));
}
