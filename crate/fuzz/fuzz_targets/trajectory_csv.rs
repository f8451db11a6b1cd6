#![no_main]

use libfuzzer_sys::fuzz_target;
use trajopt_cli::io::read_trajectory;

fuzz_target!(|data: &[u8]| {
    if let Ok((xs, us)) = read_trajectory(data) {
        assert_eq!(xs.len(), us.len() + 1);
        assert!(xs.iter().all(|x| x.len() == xs[0].len()));
        assert!(us.iter().all(|u| u.len() == us[0].len()));
    }
});
