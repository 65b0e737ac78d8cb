fn main() {
    std::process::exit(a4_manin::cli::main_with_args(std::env::args_os()));
}
