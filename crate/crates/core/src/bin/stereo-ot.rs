fn main() {
    std::process::exit(stereo_ot::cli::main_with_args(std::env::args_os()));
}
