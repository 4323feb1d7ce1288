fn main() {
    std::process::exit(blk_core::cli::main_with_args(std::env::args_os()));
}
