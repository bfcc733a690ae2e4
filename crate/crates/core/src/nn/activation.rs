use std::fmt;
use std::str::FromStr;

/// SELU scale.
pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
/// SELU negative-branch saturation.
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_3;

#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

#[inline]
pub fn selu_grad(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Selu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Selu => selu(x),
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative given the pre-activation `x` and the output `y = apply(x)`.
    #[inline]
    pub fn grad(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Selu => selu_grad(x),
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Selu => "selu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "selu" => Ok(Activation::Selu),
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selu_fixed_points() {
        assert_eq!(selu(0.0), 0.0);
        assert!((selu(1.0) - 1.0507009873554805).abs() < 1e-15);
        assert_eq!(selu_grad(2.0), SELU_LAMBDA);
        assert!(selu_grad(-745.0) < 1e-300);
        // negative saturation is -lambda * alpha
        assert!((selu(-50.0) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-12);
    }

    #[test]
    fn selu_continuous_and_increasing() {
        let mut prev = selu(-10.0);
        for k in 1..=10_000 {
            let x = -10.0 + 20.0 * k as f64 / 10_000.0;
            let y = selu(x);
            assert!(y > prev, "not increasing at {x}");
            prev = y;
        }
        let eps = 1e-9;
        assert!((selu(eps) - selu(-eps)).abs() < 1e-8);
    }

    #[test]
    fn selu_grad_matches_difference_quotient() {
        for &x in &[-3.0, -0.5, -1e-3, 0.25, 2.0] {
            let h = 1e-6;
            let fd = (selu(x + h) - selu(x - h)) / (2.0 * h);
            assert!((fd - selu_grad(x)).abs() < 1e-8, "{x}");
        }
    }

    #[test]
    fn parse_round_trip() {
        for a in [Activation::Selu, Activation::Tanh, Activation::Linear] {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("relu".parse::<Activation>().is_err());
    }
}
