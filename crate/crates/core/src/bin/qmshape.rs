fn main() {
    std::process::exit(qmshape::cli::main_with_args(std::env::args_os()));
}
