//! JSON recipes naming a construction and its parameters.

use std::str::FromStr;

use anyhow::{bail, Context, Result};
use forge_core::constructions::{self, FgdParams, Selection, StepSpec};
use forge_core::design::Design;
use forge_core::f4::F4;
use num_rational::Rational64;
use serde::{Deserialize, Serialize};

/// A construction and its parameters. Steps that transform a design take a nested
/// `base` recipe. Group and coordinate indices are one-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "construction", rename_all = "snake_case", deny_unknown_fields)]
pub enum Recipe {
    Catalog { name: String },
    SquareOd { m: usize },
    TwoByTwo { l: u8 },
    FourGroup { k: usize, steps: Vec<StepSpec> },
    GGroup { g: usize, a: usize },
    NewFgd {
        m: usize,
        /// Rate as `p/q` or an integer.
        rate: String,
        #[serde(default)]
        xi1: Option<F4>,
        #[serde(default)]
        xi2: Option<F4>,
        /// Seeds a random choice of the extra vectors instead of canonical order.
        #[serde(default)]
        seed: Option<u64>,
    },
    A { base: Box<Recipe>, l: u8 },
    B { base: Box<Recipe>, l: u8 },
    C { base: Box<Recipe>, xi: [F4; 4] },
    Permute { base: Box<Recipe>, sigma: Vec<usize> },
    DeleteGroup { base: Box<Recipe>, group: usize },
}

impl Recipe {
    pub fn build(&self) -> Result<Design> {
        Ok(match self {
            Recipe::Catalog { name } => {
                constructions::by_name(name).with_context(|| format!("unknown catalog design `{name}`"))?
            }
            Recipe::SquareOd { m } => constructions::square_od(*m)?,
            Recipe::TwoByTwo { l } => constructions::two_by_two(*l)?,
            Recipe::FourGroup { k, steps } => constructions::four_group_recursive(*k, steps)?,
            Recipe::GGroup { g, a } => constructions::g_group(*g, *a)?,
            Recipe::NewFgd { m, rate, xi1, xi2, seed } => {
                let rate = Rational64::from_str(rate).map_err(|_| anyhow::anyhow!("bad rate `{rate}`"))?;
                let mut p = FgdParams::new(*m, rate);
                if let Some(x) = xi1 {
                    p.xi1 = *x;
                }
                if let Some(x) = xi2 {
                    p.xi2 = *x;
                }
                if let Some(s) = seed {
                    p.selection = Selection::Seeded(*s);
                }
                constructions::new_fgd(&p)?
            }
            Recipe::A { base, l } => constructions::construction_a(&base.build()?, *l)?,
            Recipe::B { base, l } => constructions::construction_b(&base.build()?, *l)?,
            Recipe::C { base, xi } => constructions::construction_c(&base.build()?, *xi)?,
            Recipe::Permute { base, sigma } => constructions::permute(&base.build()?, sigma)?,
            Recipe::DeleteGroup { base, group } => {
                if *group == 0 {
                    bail!("groups are numbered from 1");
                }
                constructions::delete_group(&base.build()?, group - 1)?
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_recipe_parses() {
        let text = r#"{"construction":"a","l":1,"base":{"construction":"square_od","m":1}}"#;
        let r: Recipe = serde_json::from_str(text).unwrap();
        let d = r.build().unwrap();
        assert_eq!((d.m(), d.k()), (2, 8));
    }

    #[test]
    fn fgd_recipe_rate() {
        let r = Recipe::NewFgd { m: 2, rate: "17/8".into(), xi1: None, xi2: None, seed: None };
        assert_eq!(r.build().unwrap().k(), 17);
        let bad = Recipe::NewFgd { m: 2, rate: "x".into(), xi1: None, xi2: None, seed: None };
        assert!(bad.build().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<Recipe>(r#"{"construction":"square_od","m":1,"x":2}"#).is_err());
    }
}
