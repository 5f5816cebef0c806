use crate::error::{Error, Result};

/// Slices a C x T signal into windows of `width` samples every `stride`
/// samples, flattening each window channel-major. A trailing partial window
/// is dropped.
pub fn window(signal: &[Vec<f64>], width: usize, stride: usize) -> Result<Vec<Vec<f64>>> {
    let Some(first) = signal.first() else {
        return Err(Error::invalid("signal has no channels"));
    };
    let length = first.len();
    if let Some(bad) = signal.iter().find(|c| c.len() != length) {
        return Err(Error::dimension("window channel length", length, bad.len()));
    }
    if width == 0 || stride == 0 {
        return Err(Error::invalid("window width and stride must be positive"));
    }
    if length < width {
        return Err(Error::invalid(format!(
            "signal of length {length} is shorter than the window {width}"
        )));
    }
    let count = (length - width) / stride + 1;
    Ok((0..count)
        .map(|i| {
            let start = i * stride;
            signal
                .iter()
                .flat_map(|channel| channel[start..start + width].iter().copied())
                .collect()
        })
        .collect())
}
