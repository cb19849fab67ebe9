use crate::error::{Error, Result};

/// Mean firing rate over `n_windows` consecutive windows of length `window`
/// starting at t = 0. `recording` is the length of the spike recording and
/// must cover all windows.
pub fn firing_rate(spike_times: &[f64], window: f64, n_windows: usize, recording: f64) -> Result<f64> {
    if !(window > 0.0) || n_windows < 1 {
        return Err(Error::invalid("firing rate needs window > 0 and n_windows >= 1"));
    }
    let span = window * n_windows as f64;
    // Allow for the last spike landing exactly on a step boundary.
    if recording < span * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "recording of {recording} s is shorter than {n_windows} windows of {window} s"
        )));
    }
    let mut total = 0.0;
    for w in 0..n_windows {
        let lo = w as f64 * window;
        let hi = lo + window;
        let count = spike_times.iter().filter(|&&t| t >= lo && t < hi).count();
        total += count as f64 / window;
    }
    Ok(total / n_windows as f64)
}
