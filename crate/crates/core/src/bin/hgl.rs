fn main() {
    std::process::exit(hgl::cli::main_with_args(std::env::args_os()));
}
