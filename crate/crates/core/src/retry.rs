use std::time::Duration;

use crate::error::{Error, Result};

/// Runs `f`, retrying once after `backoff_ms` if it fails with a transport error.
pub(crate) fn with_one_retry<T>(backoff_ms: u64, mut f: impl FnMut() -> Result<T>) -> Result<T> {
    match f() {
        Err(Error::Transport { .. }) => {
            std::thread::sleep(Duration::from_millis(backoff_ms));
            f()
        }
        other => other,
    }
}
