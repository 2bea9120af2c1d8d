fn main() {
    std::process::exit(gpmil::cli::cli_main(std::env::args_os()));
}
