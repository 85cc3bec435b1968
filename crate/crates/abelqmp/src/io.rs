//! JSON documents and number formatting shared by the engines and the CLI.
//!
//! Every document rejects unknown fields. Floats are written like C's `%.17g`
//! in JSON and `%.12g` in CSV.

use serde::{Deserialize, Serialize};

use crate::eigen::EigenList;
use crate::error::{Error, Result};
use crate::group::{GroupSpec, HomSpec};
use crate::herald::{Branch, HeraldedMessage};

/// Version stamped into versioned documents.
pub const SCHEMA_VERSION: u32 = 1;

fn check_version(v: Option<u32>) -> Result<()> {
    match v {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(other) => Err(Error::validation(format!(
            "unsupported schema version {other}, expected {SCHEMA_VERSION}"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDoc {
    pub moduli: Vec<usize>,
}

impl GroupDoc {
    pub fn to_spec(&self) -> Result<GroupSpec> {
        GroupSpec::new(self.moduli.clone())
    }

    pub fn from_spec(g: &GroupSpec) -> Self {
        GroupDoc {
            moduli: g.moduli().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomDoc {
    pub source: GroupDoc,
    pub target: GroupDoc,
    pub matrix: Vec<Vec<usize>>,
}

impl HomDoc {
    pub fn to_spec(&self) -> Result<HomSpec> {
        HomSpec::new(self.source.to_spec()?, self.target.to_spec()?, self.matrix.clone())
    }

    pub fn from_spec(h: &HomSpec) -> Self {
        HomDoc {
            source: GroupDoc::from_spec(h.source()),
            target: GroupDoc::from_spec(h.target()),
            matrix: h.matrix().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenListDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub group: GroupDoc,
    pub lambda: Vec<f64>,
}

impl EigenListDoc {
    pub fn to_list(&self) -> Result<EigenList> {
        check_version(self.version)?;
        EigenList::new(&self.group.to_spec()?, self.lambda.clone())
    }

    pub fn from_list(l: &EigenList) -> Self {
        EigenListDoc {
            version: Some(SCHEMA_VERSION),
            group: GroupDoc::from_spec(l.group()),
            lambda: l.values().to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDoc {
    pub p: f64,
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub label: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeraldedDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub group: GroupDoc,
    pub branches: Vec<BranchDoc>,
}

impl HeraldedDoc {
    pub fn to_message(&self) -> Result<HeraldedMessage> {
        check_version(self.version)?;
        let g = self.group.to_spec()?;
        let branches = self
            .branches
            .iter()
            .enumerate()
            .map(|(i, b)| {
                Ok(Branch {
                    p: b.p,
                    lambda: EigenList::new(&g, b.lambda.clone())
                        .map_err(|e| Error::validation(format!("branches[{i}].lambda: {e}")))?,
                    label: b.label.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HeraldedMessage::new(&g, branches)
    }

    pub fn from_message(m: &HeraldedMessage) -> Self {
        HeraldedDoc {
            version: Some(SCHEMA_VERSION),
            group: GroupDoc::from_spec(m.group()),
            branches: m
                .branches()
                .iter()
                .map(|b| BranchDoc {
                    p: b.p,
                    lambda: b.lambda.values().to_vec(),
                    label: b.label.clone(),
                })
                .collect(),
        }
    }
}

/// Either a bare eigen list or a heralded mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MessageDoc {
    Pure(EigenListDoc),
    Mixed(HeraldedDoc),
}

impl MessageDoc {
    pub fn to_message(&self) -> Result<HeraldedMessage> {
        match self {
            MessageDoc::Pure(d) => Ok(HeraldedMessage::pure(d.to_list()?)),
            MessageDoc::Mixed(d) => d.to_message(),
        }
    }
}

/// Formats like C's `%.{digits}g`.
pub fn format_g(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mant);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// CSV number formatting (12 significant digits).
pub fn csv_num(x: f64) -> String {
    format_g(x, 12)
}

struct G17;

impl serde_json::ser::Formatter for G17 {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(format_g(value, 17).as_bytes())
    }
}

/// Serializes to compact JSON with 17 significant digits per float.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, G17);
    value.serialize(&mut ser)?;
    String::from_utf8(buf).map_err(|e| Error::validation(e.to_string()))
}

/// Parses a JSON document, prefixing errors with a location hint.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::validation(format!("{what}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting() {
        assert_eq!(format_g(1.5, 12), "1.5");
        assert_eq!(format_g(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_g(1e-7, 12), "1e-07");
        assert_eq!(format_g(123456789012345.0, 12), "1.23456789012e+14");
        assert_eq!(format_g(-2.0, 17), "-2");
        let x = 0.1 + 0.2;
        assert_eq!(format_g(x, 17).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn documents_round_trip() {
        let g = GroupSpec::new(vec![3, 2]).unwrap();
        let l = EigenList::new(&g, vec![1.5, 0.5, 1.0, 1.5, 0.5, 1.0]).unwrap();
        let doc = EigenListDoc::from_list(&l);
        let text = to_json(&doc).unwrap();
        let back: EigenListDoc = from_json(&text, "eigen list").unwrap();
        assert_eq!(back.to_list().unwrap(), l);
        let m = HeraldedMessage::pure(l);
        let text = to_json(&HeraldedDoc::from_message(&m)).unwrap();
        let back: MessageDoc = from_json(&text, "message").unwrap();
        assert_eq!(back.to_message().unwrap(), m);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(from_json::<GroupDoc>(r#"{"moduli":[3],"x":1}"#, "group").is_err());
        let bad = r#"{"group":{"moduli":[6]},"lambda":[1,1,1,1,1,0]}"#;
        let doc: EigenListDoc = from_json(bad, "eigen list").unwrap();
        assert!(doc.to_list().is_err());
        assert!(from_json::<EigenListDoc>(r#"{"version":2,"group":{"moduli":[2]},"lambda":[1,1]}"#, "x")
            .unwrap()
            .to_list()
            .is_err());
    }
}
