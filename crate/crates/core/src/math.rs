//! Thin wrappers over `libm` so the rest of the crate reads like `std` code.

#[inline]
pub(crate) fn powi(base: f64, exp: u32) -> f64 {
    libm::pow(base, exp as f64)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}
