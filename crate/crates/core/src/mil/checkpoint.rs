use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::params::{MilDims, MilParams};
use super::standardize::Standardizer;
use super::train::{EpochRecord, TrainConfig};
use crate::error::{Error, Result};

/// On-disk `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub dims: MilDims,
    pub params: Map<String, Value>,
    pub train_config: TrainConfig,
    pub log: Vec<EpochRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<Standardizer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
}

fn matrix_value(m: &Array2<f64>) -> Value {
    Value::Array(m.rows().into_iter().map(|r| Value::from(r.to_vec())).collect())
}

fn take<T: for<'de> Deserialize<'de>>(map: &Map<String, Value>, name: &str) -> Result<T> {
    let v = map.get(name).ok_or_else(|| Error::InvalidConfig(format!("checkpoint lacks `{name}`")))?;
    Ok(serde_json::from_value(v.clone())?)
}

fn matrix(map: &Map<String, Value>, name: &str, rows: usize, cols: usize) -> Result<Array2<f64>> {
    let nested: Vec<Vec<f64>> = take(map, name)?;
    if nested.len() != rows || nested.iter().any(|r| r.len() != cols) {
        return Err(Error::DimensionMismatch(format!("`{name}` is not {rows}x{cols}")));
    }
    Ok(Array2::from_shape_vec((rows, cols), nested.concat()).expect("shape checked"))
}

fn vector(map: &Map<String, Value>, name: &str, len: usize) -> Result<Array1<f64>> {
    let v: Vec<f64> = take(map, name)?;
    if v.len() != len {
        return Err(Error::DimensionMismatch(format!("`{name}` has length {}, expected {len}", v.len())));
    }
    Ok(Array1::from(v))
}

pub fn params_to_json(p: &MilParams) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("embed1_w".into(), matrix_value(&p.embed1_w));
    m.insert("embed1_b".into(), Value::from(p.embed1_b.to_vec()));
    m.insert("embed2_w".into(), matrix_value(&p.embed2_w));
    m.insert("embed2_b".into(), Value::from(p.embed2_b.to_vec()));
    m.insert("attn_v".into(), matrix_value(&p.attn_v));
    if let Some(g) = &p.attn_gate {
        m.insert("attn_gate".into(), matrix_value(g));
    }
    m.insert("attn_w".into(), Value::from(p.attn_w.to_vec()));
    m.insert("cls_w".into(), Value::from(p.cls_w.to_vec()));
    m.insert("cls_b".into(), Value::from(p.cls_b));
    m
}

pub fn params_from_json(dims: &MilDims, m: &Map<String, Value>) -> Result<MilParams> {
    let p = MilParams {
        embed1_w: matrix(m, "embed1_w", dims.h1, dims.d)?,
        embed1_b: vector(m, "embed1_b", dims.h1)?,
        embed2_w: matrix(m, "embed2_w", dims.h2, dims.h1)?,
        embed2_b: vector(m, "embed2_b", dims.h2)?,
        attn_v: matrix(m, "attn_v", dims.attn, dims.h2)?,
        attn_gate: if dims.gated { Some(matrix(m, "attn_gate", dims.attn, dims.h2)?) } else { None },
        attn_w: vector(m, "attn_w", dims.attn)?,
        cls_w: vector(m, "cls_w", dims.h2)?,
        cls_b: take(m, "cls_b")?,
    };
    p.validate()?;
    Ok(p)
}

impl Checkpoint {
    pub fn new(params: &MilParams, train_config: TrainConfig, log: Vec<EpochRecord>) -> Self {
        Self {
            version: 1,
            dims: params.dims(),
            params: params_to_json(params),
            train_config,
            log,
            standardizer: None,
            best_epoch: None,
        }
    }

    pub fn params(&self) -> Result<MilParams> {
        params_from_json(&self.dims, &self.params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        if c.version != 1 {
            return Err(Error::InvalidConfig(format!("unsupported checkpoint version {}", c.version)));
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_survive_json() {
        for gated in [false, true] {
            let dims = MilDims { d: 5, h1: 7, h2: 6, attn: 3, gated };
            let p = MilParams::init(&dims, 4).unwrap();
            let ck = Checkpoint::new(&p, TrainConfig::default(), vec![]);
            let text = serde_json::to_string(&ck).unwrap();
            assert!(text.contains("\"L\":3"));
            let back: Checkpoint = serde_json::from_str(&text).unwrap();
            assert_eq!(back.params().unwrap(), p);
        }
    }

    #[test]
    fn shape_errors() {
        let dims = MilDims { d: 2, h1: 2, h2: 2, attn: 1, gated: false };
        let mut m = params_to_json(&MilParams::zeros(&dims));
        m.insert("embed1_b".into(), Value::from(vec![0.0]));
        assert!(params_from_json(&dims, &m).is_err());
        m.remove("embed1_b");
        assert!(params_from_json(&dims, &m).is_err());
    }
}
