#![no_main]

use libfuzzer_sys::fuzz_target;

// NUL-separated argument list; parsing must never panic.
fuzz_target!(|data: &[u8]| {
    let args = std::iter::once("traffic".to_owned())
        .chain(data.split(|&b| b == 0).map(|a| String::from_utf8_lossy(a).into_owned()));
    if let Err(e) = traffic_cli::parse_args(args) {
        assert!(e.code == traffic_cli::EXIT_OK || e.code == traffic_cli::EXIT_USAGE);
    }
});
