fn main() {
    std::process::exit(marginals::cli::main_with_args(std::env::args_os()));
}
