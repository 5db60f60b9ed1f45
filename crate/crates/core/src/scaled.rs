//! Complex numbers carried as `mantissa * exp(exponent)`.
//!
//! Airy functions along the paths used here span several hundred orders of
//! magnitude, so products such as `phi(x) * eta(y)` are formed by adding
//! exponents before anything is exponentiated.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub exponent: Complex64,
}

impl Scaled {
    pub const ZERO: Scaled = Scaled {
        mantissa: Complex64::new(0.0, 0.0),
        exponent: Complex64::new(0.0, 0.0),
    };

    pub fn new(mantissa: Complex64, exponent: Complex64) -> Self {
        Self { mantissa, exponent }
    }

    pub fn from_value(value: Complex64) -> Self {
        Self::new(value, Complex64::new(0.0, 0.0))
    }

    /// Plain value; overflows to infinity or underflows to zero when the
    /// exponent is out of range.
    pub fn value(self) -> Complex64 {
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return self.mantissa;
        }
        self.mantissa * self.exponent.exp()
    }

    /// `ln|value|`, finite for any non-zero mantissa.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.norm().ln() + self.exponent.re
    }

    pub fn mul(self, other: Scaled) -> Scaled {
        Scaled::new(self.mantissa * other.mantissa, self.exponent + other.exponent)
    }

    pub fn div(self, other: Scaled) -> Scaled {
        Scaled::new(self.mantissa / other.mantissa, self.exponent - other.exponent)
    }

    pub fn scale(self, factor: Complex64) -> Scaled {
        Scaled::new(self.mantissa * factor, self.exponent)
    }

    /// Sum of two scaled numbers, expressed on the larger of the two scales.
    pub fn add(self, other: Scaled) -> Scaled {
        if other.mantissa == Complex64::new(0.0, 0.0) {
            return self;
        }
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return other;
        }
        let (big, small) = if self.exponent.re >= other.exponent.re {
            (self, other)
        } else {
            (other, self)
        };
        let rel = (small.exponent - big.exponent).exp();
        Scaled::new(big.mantissa + small.mantissa * rel, big.exponent)
    }

    /// Moves the imaginary part of the exponent and the magnitude of the
    /// mantissa into a real exponent with a unit-order mantissa.
    pub fn normalized(self) -> Scaled {
        let norm = self.mantissa.norm();
        if norm == 0.0 || !norm.is_finite() {
            return self;
        }
        let phase = Complex64::from_polar(1.0, self.exponent.im);
        Scaled::new(
            self.mantissa / norm * phase,
            Complex64::new(self.exponent.re + norm.ln(), 0.0),
        )
    }
}
