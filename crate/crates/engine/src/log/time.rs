//! Minimal UTC timestamp formatting; no timezone database needed.

use std::time::{SystemTime, UNIX_EPOCH};

pub fn now_iso8601() -> String {
    let d = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default();
    format_iso8601(d.as_secs(), d.subsec_micros())
}

/// Civil date from days since the Unix epoch (Howard Hinnant's algorithm).
fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

pub fn format_iso8601(unix_secs: u64, micros: u32) -> String {
    let days = (unix_secs / 86_400) as i64;
    let rem = unix_secs % 86_400;
    let (year, month, day) = civil_from_days(days);
    format!(
        "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:06}Z",
        year,
        month,
        day,
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60,
        micros
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_instants() {
        assert_eq!(format_iso8601(0, 0), "1970-01-01T00:00:00.000000Z");
        assert_eq!(format_iso8601(86_400, 1), "1970-01-02T00:00:00.000001Z");
        // 2000-03-01 covers the leap-century boundary.
        assert_eq!(format_iso8601(951_868_800, 0), "2000-03-01T00:00:00.000000Z");
        assert_eq!(format_iso8601(1_700_000_000, 999_999), "2023-11-14T22:13:20.999999Z");
    }
}
