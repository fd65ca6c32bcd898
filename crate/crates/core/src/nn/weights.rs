use super::spec::NetworkSpec;
use super::NnError;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl std::str::FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "f32" | "single" => Ok(Precision::F32),
            "f64" | "double" => Ok(Precision::F64),
            other => Err(format!("unknown precision {other:?}")),
        }
    }
}

/// Floating-point element type of the engine.
pub trait Scalar:
    Copy
    + Debug
    + Default
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    const PRECISION: Precision;
    const BYTES: usize;
    const ZERO: Self;
    const ONE: Self;
    /// Machine epsilon.
    const EPSILON: Self;

    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    fn exp(self) -> Self;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;
    fn write_le(self, out: &mut Vec<u8>);
    fn read_le(bytes: &[u8]) -> Self;
    fn bits(self) -> u64;
}

macro_rules! impl_scalar {
    ($t:ty, $p:expr, $bytes:expr) => {
        impl Scalar for $t {
            const PRECISION: Precision = $p;
            const BYTES: usize = $bytes;
            const ZERO: Self = 0.0;
            const ONE: Self = 1.0;
            const EPSILON: Self = <$t>::EPSILON;

            #[inline]
            fn from_f64(v: f64) -> Self {
                v as $t
            }
            #[inline]
            fn to_f64(self) -> f64 {
                self as f64
            }
            #[inline]
            fn exp(self) -> Self {
                <$t>::exp(self)
            }
            #[inline]
            fn sqrt(self) -> Self {
                <$t>::sqrt(self)
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }
            fn read_le(bytes: &[u8]) -> Self {
                <$t>::from_le_bytes(bytes.try_into().expect("scalar width"))
            }
            fn bits(self) -> u64 {
                self.to_bits() as u64
            }
        }
    };
}

impl_scalar!(f32, Precision::F32, 4);
impl_scalar!(f64, Precision::F64, 8);

#[derive(Debug, Clone)]
pub struct ParamTensor<T> {
    pub dims: Vec<usize>,
    pub data: Vec<T>,
}

impl<T: Scalar> ParamTensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        ParamTensor {
            dims: dims.to_vec(),
            data: vec![T::ZERO; dims.iter().product()],
        }
    }
}

/// Trained parameters, one tensor per [`ParamShape`] of the owning spec.
///
/// `generation` counts in-place updates and lets a forward cache detect that
/// the weights changed underneath it. It takes no part in equality.
#[derive(Debug, Clone)]
pub struct ModelWeights<T> {
    tensors: Vec<ParamTensor<T>>,
    generation: u64,
}

impl<T: Scalar> PartialEq for ModelWeights<T> {
    fn eq(&self, other: &Self) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.dims == b.dims && a.data == b.data)
    }
}

impl<T: Scalar> ModelWeights<T> {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        ModelWeights {
            tensors: spec
                .param_shapes()
                .iter()
                .map(|p| ParamTensor::zeros(&p.dims))
                .collect(),
            generation: 0,
        }
    }

    /// Glorot-uniform kernels and zero biases.
    pub fn glorot<R: Rng + ?Sized>(spec: &NetworkSpec, rng: &mut R) -> Self {
        let mut w = Self::zeros(spec);
        for (shape, t) in spec.param_shapes().iter().zip(w.tensors.iter_mut()) {
            if shape.dims.len() < 2 {
                continue;
            }
            let (fan_in, fan_out) = glorot_fans(&shape.dims);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in t.data.iter_mut() {
                *v = T::from_f64(rng.random_range(-limit..limit));
            }
        }
        w
    }

    pub fn from_tensors(spec: &NetworkSpec, tensors: Vec<ParamTensor<T>>) -> Result<Self, NnError> {
        let w = ModelWeights {
            tensors,
            generation: 0,
        };
        w.check_against(spec)?;
        Ok(w)
    }

    pub fn check_against(&self, spec: &NetworkSpec) -> Result<(), NnError> {
        let shapes = spec.param_shapes();
        if shapes.len() != self.tensors.len() {
            return Err(NnError::ShapeMismatch(format!(
                "spec declares {} parameter tensors, weights hold {}",
                shapes.len(),
                self.tensors.len()
            )));
        }
        for (s, t) in shapes.iter().zip(&self.tensors) {
            if s.dims != t.dims || t.data.len() != s.numel() {
                return Err(NnError::ShapeMismatch(format!(
                    "{}: expected {:?}, found {:?} ({} values)",
                    s.name,
                    s.dims,
                    t.dims,
                    t.data.len()
                )));
            }
        }
        Ok(())
    }

    pub fn tensors(&self) -> &[ParamTensor<T>] {
        &self.tensors
    }

    /// Mutable access; bumps the generation so outstanding caches go stale.
    pub fn tensors_mut(&mut self) -> &mut [ParamTensor<T>] {
        self.generation += 1;
        &mut self.tensors
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    pub(crate) fn zero_fill(&mut self) {
        for t in &mut self.tensors {
            t.data.fill(T::ZERO);
        }
    }

    pub(crate) fn scale(&mut self, factor: T) {
        for t in &mut self.tensors {
            for v in &mut t.data {
                *v *= factor;
            }
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
    }

    /// Bitwise equality of every parameter.
    pub fn bit_identical(&self, other: &Self) -> bool {
        self.tensors.len() == other.tensors.len()
            && self.tensors.iter().zip(&other.tensors).all(|(a, b)| {
                a.dims == b.dims
                    && a.data.len() == b.data.len()
                    && a.data.iter().zip(&b.data).all(|(x, y)| x.bits() == y.bits())
            })
    }

    pub fn convert<U: Scalar>(&self) -> ModelWeights<U> {
        ModelWeights {
            tensors: self
                .tensors
                .iter()
                .map(|t| ParamTensor {
                    dims: t.dims.clone(),
                    data: t.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
                })
                .collect(),
            generation: 0,
        }
    }
}

/// Keras-style fan computation: dense `[in, out]`, conv `[k, cin, cout]`.
fn glorot_fans(dims: &[usize]) -> (usize, usize) {
    match dims {
        [fan_in, fan_out] => (*fan_in, *fan_out),
        [k, cin, cout] => (k * cin, k * cout),
        _ => {
            let n: usize = dims.iter().product();
            (n, n)
        }
    }
}
