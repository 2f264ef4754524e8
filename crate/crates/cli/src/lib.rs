//! Command implementations behind the `string-pe` binary.

pub mod bench;
pub mod csvio;
pub mod encode;
pub mod verify;
