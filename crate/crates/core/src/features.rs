//! Raw feature encoding of a problem at a given block.
//!
//! CPC15 layout (12 values):
//! `[Ha, pHa, La, Hb, pHb, Lb, LotNumB, LotShapeB, Corr, Amb, Feedback, Block]`.
//!
//! CPC18 inserts `LotNumA, LotShapeA` after `La` and keeps the same tail,
//! giving 14 values.

use thiserror::Error;

use crate::gamble::{Correlation, Gamble, GambleError, LotShape, Problem, Schema};
use crate::money::Money;

pub const CPC15_NAMES: [&str; 12] = [
    "Ha", "pHa", "La", "Hb", "pHb", "Lb", "LotNumB", "LotShapeB", "Corr", "Amb", "Feedback",
    "Block",
];

pub const CPC18_NAMES: [&str; 14] = [
    "Ha", "pHa", "La", "LotNumA", "LotShapeA", "Hb", "pHb", "Lb", "LotNumB", "LotShapeB", "Corr",
    "Amb", "Feedback", "Block",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("expected {expected} features for {schema:?}, got {got}")]
    Width {
        schema: Schema,
        expected: usize,
        got: usize,
    },
    #[error("feature `{name}` has non-integral or out-of-range value {value}")]
    Code { name: &'static str, value: f64 },
    #[error(transparent)]
    Gamble(#[from] GambleError),
}

pub fn feature_dim(schema: Schema) -> usize {
    match schema {
        Schema::Cpc15 => CPC15_NAMES.len(),
        Schema::Cpc18 => CPC18_NAMES.len(),
    }
}

pub fn feature_names(schema: Schema) -> &'static [&'static str] {
    match schema {
        Schema::Cpc15 => &CPC15_NAMES,
        Schema::Cpc18 => &CPC18_NAMES,
    }
}

/// Encodes a problem at `block` (1-based) and feedback condition.
pub fn encode_features(p: &Problem, block: u32, feedback: bool) -> Vec<f64> {
    debug_assert!(block >= 1, "blocks are 1-based");
    let (a, b) = (p.gamble_a(), p.gamble_b());
    let mut v = Vec::with_capacity(feature_dim(p.schema()));
    v.extend([a.high.as_f64(), a.p_high, a.low.as_f64()]);
    if p.schema() == Schema::Cpc18 {
        v.extend([f64::from(a.lot_num), f64::from(a.lot_shape.code())]);
    }
    v.extend([
        b.high.as_f64(),
        b.p_high,
        b.low.as_f64(),
        f64::from(b.lot_num),
        f64::from(b.lot_shape.code()),
        f64::from(p.corr().code()),
        if p.amb() { 1.0 } else { 0.0 },
        if feedback { 1.0 } else { 0.0 },
        f64::from(block),
    ]);
    v
}

/// The problem content recovered from a feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedFeatures {
    pub gamble_a: Gamble,
    pub gamble_b: Gamble,
    pub corr: Correlation,
    pub amb: bool,
    pub feedback: bool,
    pub block: u32,
}

fn int_code(name: &'static str, value: f64) -> Result<i64, FeatureError> {
    if value.fract() == 0.0 && value.abs() < 1e9 {
        Ok(value as i64)
    } else {
        Err(FeatureError::Code { name, value })
    }
}

fn money(name: &'static str, value: f64) -> Result<Money, FeatureError> {
    Money::from_f64(value).ok_or(FeatureError::Code { name, value })
}

fn flag(name: &'static str, value: f64) -> Result<bool, FeatureError> {
    match int_code(name, value)? {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(FeatureError::Code { name, value }),
    }
}

/// Inverse of [`encode_features`].
pub fn decode_features(v: &[f64], schema: Schema) -> Result<DecodedFeatures, FeatureError> {
    let expected = feature_dim(schema);
    if v.len() != expected {
        return Err(FeatureError::Width {
            schema,
            expected,
            got: v.len(),
        });
    }
    let (a_lot_num, a_shape, rest) = match schema {
        Schema::Cpc15 => (1, LotShape::None, &v[3..]),
        Schema::Cpc18 => (
            int_code("LotNumA", v[3])?,
            LotShape::from_code(int_code("LotShapeA", v[4])?)?,
            &v[5..],
        ),
    };
    let lot_num = |name, x| -> Result<u32, FeatureError> {
        u32::try_from(int_code(name, x)?).map_err(|_| FeatureError::Code { name, value: x })
    };
    let gamble_a = Gamble::new(
        money("Ha", v[0])?,
        v[1],
        money("La", v[2])?,
        lot_num("LotNumA", a_lot_num as f64)?,
        a_shape,
    )?;
    let gamble_b = Gamble::new(
        money("Hb", rest[0])?,
        rest[1],
        money("Lb", rest[2])?,
        lot_num("LotNumB", rest[3])?,
        LotShape::from_code(int_code("LotShapeB", rest[4])?)?,
    )?;
    let block = int_code("Block", rest[8])?;
    if block < 1 || block > u32::MAX as i64 {
        return Err(FeatureError::Code {
            name: "Block",
            value: rest[8],
        });
    }
    Ok(DecodedFeatures {
        gamble_a,
        gamble_b,
        corr: Correlation::from_code(int_code("Corr", rest[5])?)?,
        amb: flag("Amb", rest[6])?,
        feedback: flag("Feedback", rest[7])?,
        block: block as u32,
    })
}
