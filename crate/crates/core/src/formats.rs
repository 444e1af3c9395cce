//! Interchange formats used by the CLI.
//!
//! Sequence CSV: header `index,re,im`, one row per sample with indices
//! `0..P-1`, values at full double precision (17 significant digits).
//!
//! Decomposition JSON:
//! `{"components":[{"a":{"re":..,"im":..},"r":{"re":..,"im":..}}, ...]}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{ComplexSequence, Decomposition, GeometricComponent};

/// Format a float with 17 significant digits; round-trips exactly through a
/// f64 parse on the same platform.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

// ---------------------------------------------------------------------------
// Sequence CSV
// ---------------------------------------------------------------------------

pub fn sequence_to_csv(s: &ComplexSequence) -> String {
    let mut out = String::from("index,re,im\n");
    for (index, sample) in s.samples().iter().enumerate() {
        out.push_str(&format!(
            "{index},{},{}\n",
            format_f64(sample.re),
            format_f64(sample.im)
        ));
    }
    out
}

pub fn sequence_from_csv(text: &str) -> Result<ComplexSequence> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty sequence CSV"))?;
    if header.trim() != "index,re,im" {
        return Err(Error::parse(format!(
            "expected header 'index,re,im', got '{}'",
            header.trim()
        )));
    }
    let mut samples = Vec::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(format!(
                "row {row}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        let index: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("row {row}: bad index '{}'", fields[0])))?;
        if index != row {
            return Err(Error::parse(format!(
                "row {row}: index column reads {index}, expected {row}"
            )));
        }
        let re: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("row {row}: bad real part '{}'", fields[1])))?;
        let im: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::parse(format!("row {row}: bad imaginary part '{}'", fields[2])))?;
        samples.push(Complex64::new(re, im));
    }
    ComplexSequence::new(samples)
}

// ---------------------------------------------------------------------------
// Decomposition JSON
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

impl From<Complex64> for ComplexJson {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

impl From<ComplexJson> for Complex64 {
    fn from(z: ComplexJson) -> Self {
        Complex64::new(z.re, z.im)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ComponentJson {
    a: ComplexJson,
    r: ComplexJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DecompositionJson {
    components: Vec<ComponentJson>,
    /// Optional synthesis length carried by generator configs.
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<usize>,
}

pub fn decomposition_to_json(d: &Decomposition) -> String {
    let doc = DecompositionJson {
        components: d
            .components()
            .iter()
            .map(|c| ComponentJson { a: c.initial_term.into(), r: c.common_ratio.into() })
            .collect(),
        length: None,
    };
    serde_json::to_string_pretty(&doc).expect("decomposition serialization cannot fail")
}

/// Parse a decomposition document; also returns the optional `length` field
/// used by synthesis configs.
pub fn decomposition_from_json(text: &str) -> Result<(Decomposition, Option<usize>)> {
    let doc: DecompositionJson =
        serde_json::from_str(text).map_err(|e| Error::parse(format!("decomposition JSON: {e}")))?;
    let components = doc
        .components
        .into_iter()
        .map(|c| GeometricComponent::new(c.a.into(), c.r.into()))
        .collect::<Result<Vec<_>>>()?;
    Ok((Decomposition::new(components)?, doc.length))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::synthesize;
    use proptest::prelude::*;

    fn cr(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn golden() -> Decomposition {
        Decomposition::new(vec![
            GeometricComponent::new(cr(2.0), cr(2.0)).unwrap(),
            GeometricComponent::new(cr(1.0), cr(3.0)).unwrap(),
            GeometricComponent::new(cr(4.0), cr(-1.0)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = synthesize(&golden(), 9).unwrap();
        let text = sequence_to_csv(&s);
        assert!(text.starts_with("index,re,im\n"));
        let back = sequence_from_csv(&text).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(sequence_from_csv("").is_err());
        assert!(sequence_from_csv("wrong,header,here\n0,1,2\n").is_err());
        assert!(sequence_from_csv("index,re,im\n0,1\n").is_err());
        assert!(sequence_from_csv("index,re,im\n5,1,2\n").is_err());
        assert!(sequence_from_csv("index,re,im\n0,abc,2\n").is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = golden();
        let text = decomposition_to_json(&d);
        let (back, length) = decomposition_from_json(&text).unwrap();
        assert_eq!(d, back);
        assert_eq!(length, None);
    }

    #[test]
    fn json_schema_shape() {
        let d = golden();
        let text = decomposition_to_json(&d);
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["components"][0]["a"]["re"], 2.0);
        assert_eq!(value["components"][0]["r"]["re"], 2.0);
        assert_eq!(value["components"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn json_reads_optional_length() {
        let text = r#"{"components":[{"a":{"re":1.0,"im":0.0},"r":{"re":2.0,"im":0.0}}],"length":9}"#;
        let (d, length) = decomposition_from_json(text).unwrap();
        assert_eq!(d.k(), 1);
        assert_eq!(length, Some(9));
    }

    #[test]
    fn json_rejects_duplicate_ratios() {
        let text = r#"{"components":[
            {"a":{"re":1.0,"im":0.0},"r":{"re":2.0,"im":0.0}},
            {"a":{"re":3.0,"im":0.0},"r":{"re":2.0,"im":0.0}}
        ]}"#;
        assert!(decomposition_from_json(text).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trips_arbitrary_finite_samples(
            values in proptest::collection::vec((-1e12f64..1e12, -1e12f64..1e12), 1..40)
        ) {
            let samples: Vec<Complex64> =
                values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
            let s = ComplexSequence::new(samples).unwrap();
            let back = sequence_from_csv(&sequence_to_csv(&s)).unwrap();
            prop_assert_eq!(s, back);
        }
    }
}
