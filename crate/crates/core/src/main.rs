fn main() {
    std::process::exit(icu_acuity::cli::run(std::env::args_os()));
}
