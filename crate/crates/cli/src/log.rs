//! Tiny stderr logger controlled by the `TRANSCO_LOG` environment variable
//! (`off` | `info` | `debug`, default `info`).

use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Level {
    Off,
    Info,
    Debug,
}

pub fn level() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("TRANSCO_LOG").as_deref() {
        Ok("off") | Ok("OFF") => Level::Off,
        Ok("debug") | Ok("DEBUG") => Level::Debug,
        _ => Level::Info,
    })
}

macro_rules! info {
    ($($arg:tt)*) => {
        if $crate::log::level() >= $crate::log::Level::Info {
            eprintln!($($arg)*);
        }
    };
}

macro_rules! debug {
    ($($arg:tt)*) => {
        if $crate::log::level() >= $crate::log::Level::Debug {
            eprintln!($($arg)*);
        }
    };
}
