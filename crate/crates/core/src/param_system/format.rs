//! JSON persistence for [`ParametrizedSystem`].
//!
//! ```json
//! {
//!   "name": "ex8", "n": 2, "N": 2,
//!   "entries": [
//!     {"row": 0, "col": 0, "monomials": [{"coeff": 2.0, "powers": [1, 1]}]}
//!   ],
//!   "rhs": [{"index": 0, "monomials": [{"coeff": 1.0, "powers": [0, 0]}]}]
//! }
//! ```
//!
//! Absent cells are zero. Serialization emits cells sorted by `(row, col)`
//! and monomials in graded-lex order, so output is deterministic.

use serde::{Deserialize, Serialize};

use super::{Monomial, ParametrizedSystem, PolyEntry};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFile {
    name: String,
    n: usize,
    #[serde(rename = "N")]
    num_params: usize,
    entries: Vec<CellFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rhs: Option<Vec<RhsFile>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellFile {
    row: usize,
    col: usize,
    monomials: Vec<Monomial>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RhsFile {
    index: usize,
    monomials: Vec<Monomial>,
}

fn powers_checked(monomials: Vec<Monomial>, num_params: usize, location: String) -> Result<PolyEntry> {
    if let Some(m) = monomials.iter().find(|m| m.powers.len() != num_params) {
        return Err(Error::PowerLength {
            location,
            expected: num_params,
            found: m.powers.len(),
        });
    }
    Ok(PolyEntry::from_monomials(monomials))
}

/// Parses the JSON system format.
pub fn parse_system(text: &str) -> Result<ParametrizedSystem> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let n = file.n;
    if n == 0 {
        return Err(Error::DimensionMismatch("n must be >= 1".into()));
    }
    let mut grid = vec![vec![PolyEntry::zero(); n]; n];
    let mut seen = vec![false; n * n];
    for cell in file.entries {
        if cell.row >= n || cell.col >= n {
            return Err(Error::DimensionMismatch(format!(
                "entry ({}, {}) outside {n}x{n} grid",
                cell.row, cell.col
            )));
        }
        let slot = cell.row * n + cell.col;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({}, {}) given twice",
                cell.row, cell.col
            )));
        }
        grid[cell.row][cell.col] = powers_checked(
            cell.monomials,
            file.num_params,
            format!("entry ({}, {})", cell.row, cell.col),
        )?;
    }
    let rhs = match file.rhs {
        None => None,
        Some(items) => {
            let mut b = vec![PolyEntry::zero(); n];
            let mut seen = vec![false; n];
            for item in items {
                if item.index >= n {
                    return Err(Error::DimensionMismatch(format!(
                        "rhs index {} outside length {n}",
                        item.index
                    )));
                }
                if std::mem::replace(&mut seen[item.index], true) {
                    return Err(Error::DimensionMismatch(format!(
                        "rhs index {} given twice",
                        item.index
                    )));
                }
                b[item.index] = powers_checked(
                    item.monomials,
                    file.num_params,
                    format!("rhs {}", item.index),
                )?;
            }
            Some(b)
        }
    };
    ParametrizedSystem::new(file.name, file.num_params, grid, rhs)
}

/// Serializes to the JSON system format (pretty-printed).
pub fn serialize_system(sys: &ParametrizedSystem) -> String {
    let n = sys.n;
    let mut entries = Vec::new();
    for row in 0..n {
        for col in 0..n {
            let p = sys.entry(row, col);
            if !p.is_zero() {
                entries.push(CellFile {
                    row,
                    col,
                    monomials: p.monomials().to_vec(),
                });
            }
        }
    }
    let rhs = sys.rhs().map(|b| {
        b.iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(index, p)| RhsFile {
                index,
                monomials: p.monomials().to_vec(),
            })
            .collect()
    });
    let file = SystemFile {
        name: sys.name.clone(),
        n,
        num_params: sys.num_params,
        entries,
        rhs,
    };
    serde_json::to_string_pretty(&file).expect("system serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param_system::MatrixFamily;
    use proptest::prelude::*;

    const EX14: &str = r#"{
        "name": "ex14", "n": 3, "N": 1,
        "entries": [{"row": 0, "col": 0, "monomials": [{"coeff": 1, "powers": [1]}]}]
    }"#;

    const EX8: &str = r#"{
        "name": "ex8", "n": 2, "N": 2,
        "entries": [
            {"row": 0, "col": 0, "monomials": [{"coeff": 2, "powers": [1, 1]}]},
            {"row": 0, "col": 1, "monomials": [{"coeff": 1, "powers": [0, 2]}, {"coeff": -1, "powers": [2, 0]}]}
        ]
    }"#;

    #[test]
    fn parses_example14() {
        let sys = parse_system(EX14).unwrap();
        assert_eq!(sys.order(), 3);
        assert_eq!(sys.num_params(), 1);
        assert_eq!(sys.monomial_count(), 1);
        let m = &sys.entry(0, 0).monomials()[0];
        assert_eq!((m.coeff, m.powers.clone()), (1.0, vec![1]));
    }

    #[test]
    fn parses_example8() {
        let sys = parse_system(EX8).unwrap();
        assert_eq!(sys.num_params(), 2);
        assert_eq!(sys.monomial_count(), 3);
        assert!(sys.entry(1, 0).is_zero());
    }

    #[test]
    fn cell_outside_grid_is_dimension_mismatch() {
        // entries laid out as a 2x3 grid for a 2x2 system
        let text = r#"{"name": "bad", "n": 2, "N": 1, "entries": [
            {"row": 0, "col": 2, "monomials": [{"coeff": 1, "powers": [0]}]}
        ]}"#;
        assert!(matches!(parse_system(text), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn wrong_power_length() {
        let text = r#"{"name": "bad", "n": 1, "N": 2, "entries": [
            {"row": 0, "col": 0, "monomials": [{"coeff": 1, "powers": [0]}]}
        ]}"#;
        assert_eq!(
            parse_system(text).unwrap_err(),
            Error::PowerLength {
                location: "entry (0, 0)".into(),
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn syntax_error_carries_position() {
        let text = "{\n  \"name\": \"x\",\n  \"n\": ,\n}";
        match parse_system(text) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rhs_round_trip() {
        let text = r#"{"name": "nh", "n": 2, "N": 1,
            "entries": [{"row": 0, "col": 0, "monomials": [{"coeff": 1, "powers": [0]}]}],
            "rhs": [{"index": 1, "monomials": [{"coeff": 1, "powers": [1]}]}]}"#;
        let sys = parse_system(text).unwrap();
        assert_eq!(parse_system(&serialize_system(&sys)).unwrap(), sys);
        assert!(sys.rhs().unwrap()[0].is_zero());
    }

    fn arb_system() -> impl Strategy<Value = ParametrizedSystem> {
        (1usize..4, 1usize..4).prop_flat_map(|(n, np)| {
            let monomial = (any::<f64>().prop_filter("finite", |c| c.is_finite() && c.abs() < 1e300 && *c != 0.0),
                proptest::collection::vec(0u32..4, np))
                .prop_map(|(c, p)| Monomial::new(c, p));
            let entry = proptest::collection::vec(monomial, 0..3).prop_map(PolyEntry::from_monomials);
            (
                proptest::collection::vec(proptest::collection::vec(entry.clone(), n), n),
                proptest::option::of(proptest::collection::vec(entry, n)),
            )
                .prop_map(move |(grid, rhs)| ParametrizedSystem::new("p", np, grid, rhs).unwrap())
        })
    }

    proptest! {
        #[test]
        fn serialize_parse_round_trip_is_exact(sys in arb_system()) {
            let text = serialize_system(&sys);
            let back = parse_system(&text).unwrap();
            prop_assert_eq!(&back, &sys);
            prop_assert_eq!(serialize_system(&back), text);
        }
    }
}
