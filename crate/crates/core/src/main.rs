fn main() {
    let status = relay_ofdm_im::cli::run(std::env::args_os());
    std::process::exit(status as i32);
}
