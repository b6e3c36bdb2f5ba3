//! Symmetry tables: constraint and surviving-parameter counts for the
//! default generators, as printed, plus checks against the numerics.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::basis::BasisFamily;
use crate::matrix::CMatrix;
use crate::symmetry::SymmetryKind::{self, *};
use crate::symmetry::{
    predicted_constraints, surviving_parameters, Parity, Part, Slot, SymmetryError, SymmetryOperator,
};
use num_complex::Complex64 as C;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Table {
    TwoBand,
    ThreeBand,
    FourBand,
    PsHCombined,
}

/// Generator choice for a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Gen {
    Default,
    /// Default generator with `zeta = -1`.
    ZetaMinus,
    /// `sigma_z` in place of the default `sigma_x` (2-band P).
    SigmaZ,
    /// `diag(1,-1,1)` in place of `diag(1,-1,i)` (3-band PT).
    Diag1m11,
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub table: Table,
    pub name: &'static str,
    pub ops: &'static [(SymmetryKind, Gen)],
    pub constraints: usize,
    pub parameters: usize,
    /// Surviving coefficients as printed (`x`, `xR`, `xRs`, `7`, ...).
    pub labels: &'static [&'static str],
    /// Set used instead of `labels` where the printed parities disagree
    /// with the defining relation, or the printed label is ambiguous.
    pub corrected: Option<&'static [&'static str]>,
}

impl TableRow {
    fn corrected(mut self, labels: &'static [&'static str]) -> TableRow {
        self.corrected = Some(labels);
        self
    }

    pub fn kinds(&self) -> Vec<SymmetryKind> {
        self.ops.iter().map(|(k, _)| *k).collect()
    }

    pub fn operators(&self) -> Result<Vec<SymmetryOperator>, SymmetryError> {
        self.ops.iter().map(|&(k, g)| operator(k, g, self.n)).collect()
    }

    pub fn expected_labels(&self) -> &'static [&'static str] {
        self.corrected.unwrap_or(self.labels)
    }

    /// Expected slots, expanding omitted part or parity to both.
    pub fn expected_slots(&self) -> Result<BTreeSet<Slot>, String> {
        let family = BasisFamily::for_dim(self.n).ok_or_else(|| format!("no basis for n = {}", self.n))?;
        let mut out = BTreeSet::new();
        for l in self.expected_labels() {
            out.extend(expand_label(l, family)?);
        }
        Ok(out)
    }
}

fn row(
    n: usize,
    table: Table,
    name: &'static str,
    ops: &'static [(SymmetryKind, Gen)],
    constraints: usize,
    parameters: usize,
    labels: &'static [&'static str],
) -> TableRow {
    TableRow { n, table, name, ops, constraints, parameters, labels, corrected: None }
}

pub fn operator(kind: SymmetryKind, g: Gen, n: usize) -> Result<SymmetryOperator, SymmetryError> {
    let one = C::new(1.0, 0.0);
    let generator = match g {
        Gen::Default => kind.default_generator(n, 1)?,
        Gen::ZetaMinus => kind.default_generator(n, -1)?,
        Gen::SigmaZ => crate::basis::sigma_z(),
        Gen::Diag1m11 => CMatrix::from_diag(&[one, -one, one]),
    };
    SymmetryOperator::new(kind, generator)
}

/// Parses `x`, `xR`, `xRs`, `d12Ia`, ... into coefficient slots.
pub fn expand_label(label: &str, family: BasisFamily) -> Result<BTreeSet<Slot>, String> {
    let s = label.strip_prefix('d').unwrap_or(label);
    let split = s.find(|c: char| matches!(c, 'R' | 'I' | 's' | 'a')).unwrap_or(s.len());
    let (comp, rest) = s.split_at(split);
    let component = (1..=family.len())
        .find(|&a| family.label(a) == comp)
        .ok_or_else(|| format!("unknown component in label {label:?}"))?;
    let mut chars = rest.chars().peekable();
    let parts = match chars.peek() {
        Some('R') => {
            chars.next();
            vec![Part::Re]
        }
        Some('I') => {
            chars.next();
            vec![Part::Im]
        }
        _ => vec![Part::Re, Part::Im],
    };
    let parities = match chars.next() {
        Some('s') => vec![Parity::Symmetric],
        Some('a') => vec![Parity::Antisymmetric],
        None => vec![Parity::Symmetric, Parity::Antisymmetric],
        Some(c) => return Err(format!("bad suffix {c:?} in label {label:?}")),
    };
    if chars.next().is_some() {
        return Err(format!("trailing characters in label {label:?}"));
    }
    let mut out = BTreeSet::new();
    for &part in &parts {
        for &parity in &parities {
            out.insert(Slot { component, part, parity });
        }
    }
    Ok(out)
}

pub fn rows() -> Vec<TableRow> {
    vec![
        row(2, Table::TwoBand, "none", &[], 2, 6, &["x", "y", "z"]),
        row(2, Table::TwoBand, "PHS", &[(Phs, Gen::Default)], 2, 6, &["xIa", "xRa", "yIs", "yRs", "zIa", "zRa"]),
        row(2, Table::TwoBand, "PHS (zeta=-1)", &[(Phs, Gen::ZetaMinus)], 2, 6, &["xRs", "xIs", "yRs", "yIs", "zRs", "zIs"]),
        row(2, Table::TwoBand, "PHSdag", &[(PhsDag, Gen::Default)], 2, 6, &["xRa", "xIs", "yRs", "yIa", "zRa", "zIs"]),
        row(2, Table::TwoBand, "PHSdag (zeta=-1)", &[(PhsDag, Gen::ZetaMinus)], 2, 6, &["xRs", "xIa", "yRs", "yIa", "zRs", "zIa"]),
        row(2, Table::TwoBand, "TRS", &[(Trs, Gen::Default)], 2, 6, &["xRs", "xIa", "yRa", "yIs", "zRs", "zIa"]),
        row(2, Table::TwoBand, "TRS (zeta=-1)", &[(Trs, Gen::ZetaMinus)], 2, 6, &["xRa", "xIs", "yRa", "yIs", "zRa", "zIs"]),
        row(2, Table::TwoBand, "TRSdag", &[(TrsDag, Gen::Default)], 2, 6, &["xRs", "xIs", "yRa", "yIa", "zRs", "zIs"]),
        row(2, Table::TwoBand, "TRSdag (zeta=-1)", &[(TrsDag, Gen::ZetaMinus)], 2, 6, &["xRa", "xIa", "yRa", "yIa", "zRa", "zIa"]),
        row(2, Table::TwoBand, "CS", &[(Cs, Gen::Default)], 1, 3, &["xR", "yR", "zI"]),
        row(2, Table::TwoBand, "psCS", &[(PsCs, Gen::Default)], 2, 2, &["x"]),
        row(2, Table::TwoBand, "SLS", &[(Sls, Gen::Default)], 2, 4, &["x", "y"]),
        row(2, Table::TwoBand, "I", &[(Inversion, Gen::Default)], 2, 6, &["xRs", "xIa", "yRs", "yIa", "zRa", "zIs"]).corrected(&["xRa", "xIs", "yRa", "yIs", "zRs", "zIa"]),
        row(2, Table::TwoBand, "psH", &[(PsH, Gen::Default)], 1, 3, &["xR", "yI", "zI"]),
        row(2, Table::TwoBand, "P", &[(Parity, Gen::Default)], 2, 6, &["xs", "ya", "za"]),
        row(2, Table::TwoBand, "P (sigma_z)", &[(Parity, Gen::SigmaZ)], 2, 6, &["xa", "ya", "zs"]),
        row(2, Table::TwoBand, "PT", &[(Pt, Gen::Default)], 1, 3, &["xR", "yR", "zI"]),
        row(2, Table::TwoBand, "CP", &[(Cp, Gen::Default)], 1, 3, &["xI", "yI", "zR"]),
        row(3, Table::ThreeBand, "none", &[], 4, 16, &["1", "2", "3", "4", "5", "6", "7", "8"]),
        row(3, Table::ThreeBand, "PHS", &[(Phs, Gen::Default)], 4, 16, &["1Rs", "2Rs", "3Rs", "4Ra", "5Ra", "6Ra", "7Ra", "8Ra", "1Is", "2Is", "3Is", "4Ia", "5Ia", "6Ia", "7Ia", "8Ia"]),
        row(3, Table::ThreeBand, "PHSdag", &[(PhsDag, Gen::Default)], 4, 16, &["1Rs", "2Rs", "3Rs", "4Ra", "5Ra", "6Ra", "7Ra", "8Ra", "1Ia", "2Ia", "3Ia", "4Is", "5Is", "6Is", "7Is", "8Is"]),
        row(3, Table::ThreeBand, "TRS", &[(Trs, Gen::Default)], 4, 16, &["1Ra", "2Ra", "3Ra", "4Rs", "5Rs", "6Rs", "7Rs", "8Rs", "1Is", "2Is", "3Is", "4Ia", "5Ia", "6Ia", "7Ia", "8Ia"]),
        row(3, Table::ThreeBand, "TRSdag", &[(TrsDag, Gen::Default)], 4, 16, &["1Ra", "2Ra", "3Ra", "4Rs", "5Rs", "6Rs", "7Rs", "8Rs", "1Ia", "2Ia", "3Ia", "4Is", "5Is", "6Is", "7Is", "8Is"]),
        row(3, Table::ThreeBand, "psCS", &[(PsCs, Gen::Default)], 2, 6, &["2R", "2I", "4R", "4I", "6R", "6I"]),
        row(3, Table::ThreeBand, "SLS", &[(Sls, Gen::Default)], 2, 8, &["1R", "1I", "3R", "3I", "4R", "4I", "6R", "6I"]),
        row(3, Table::ThreeBand, "I", &[(Inversion, Gen::Default)], 4, 16, &["1", "2", "3Ra", "3Is", "4", "5", "6Rs", "6Ia", "7", "8"]),
        row(3, Table::ThreeBand, "psH", &[(PsH, Gen::Default)], 2, 12, &["1I", "2R", "2I", "3R", "3I", "4R", "5R", "5I", "6R", "6I", "7I", "8R"]),
        row(3, Table::ThreeBand, "P", &[(Parity, Gen::Default)], 4, 16, &["1Ra", "2Rs", "3Ra", "4Ra", "5Rs", "6Ra", "7Rs", "8Rs", "1Ia", "2Is", "3Ia", "4Ia", "5Is", "6Ia", "7Is", "8Is"]),
        row(3, Table::ThreeBand, "PT (diag(1,-1,i))", &[(Pt, Gen::Default)], 2, 12, &["1R", "2R", "2I", "3R", "3I", "4I", "5R", "5I", "6R", "6I", "7R", "8R"]),
        row(3, Table::ThreeBand, "PT (diag(1,-1,1))", &[(Pt, Gen::Diag1m11)], 2, 8, &["1R", "2I", "3R", "4I", "5R", "6I", "7", "8"]).corrected(&["1R", "2I", "3R", "4I", "5R", "6I", "7R", "8R"]),
        row(3, Table::ThreeBand, "CP", &[(Cp, Gen::Default)], 2, 8, &["1I", "2R", "3I", "4R", "5I", "6R", "7I", "8I"]),
        row(4, Table::FourBand, "none", &[], 6, 30, &["1", "2", "3", "4", "5", "6", "7", "8", "9", "10", "11", "12", "13", "14", "15"]),
        row(4, Table::FourBand, "PHS", &[(Phs, Gen::Default)], 6, 30, &["1Ra", "1Rs", "2Ra", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "6Ra", "6Rs", "7Ra", "7Rs", "8Ra", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "12Ra", "12Rs", "13Ra", "13Rs", "14Ra", "14Rs", "15Rs", "15Ra", "1Ia", "1Is", "2Ia", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "6Ia", "6Is", "7Ia", "7Is", "8Ia", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "12Ia", "12Is", "13Ia", "13Is", "14Ia", "14Is", "15Ia", "15Is"]),
        row(4, Table::FourBand, "PHS (zeta=-1)", &[(Phs, Gen::ZetaMinus)], 6, 30, &["1Rs", "2Rs", "2Ra", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "5Rs", "6Rs", "7Rs", "8Ra", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "11Rs", "12Rs", "13Rs", "14Ra", "14Rs", "15Rs", "15Ra", "1Is", "2Ia", "2Is", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "5Is", "6Is", "7Is", "8Ia", "8Is", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "11Is", "12Is", "13Is", "14Is", "14Ia", "15Ia", "15Is"]),
        row(4, Table::FourBand, "PHSdag", &[(PhsDag, Gen::Default)], 6, 30, &["1Ra", "1Rs", "2Ra", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "6Ra", "6Rs", "7Ra", "7Rs", "8Ra", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "12Ra", "12Rs", "13Ra", "13Rs", "14Ra", "14Rs", "15Ra", "15Rs", "1Ia", "1Is", "2Is", "3Ia", "3Is", "4Ia", "4Is", "5Is", "6Ia", "6Is", "7Ia", "7Is", "8Is", "9Ia", "9Is", "10Ia", "10Is", "11Is", "12Ia", "12Is", "13Ia", "13Is", "14Ia", "14Is", "15Is", "15Ia"]),
        row(4, Table::FourBand, "PHSdag (zeta=-1)", &[(PhsDag, Gen::ZetaMinus)], 6, 30, &["1Rs", "2Ra", "2Rs", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "5Rs", "6Rs", "7Rs", "8Ra", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "11Rs", "12Rs", "13Rs", "14Rs", "14Ra", "15Ra", "15Rs", "1Ia", "2Ia", "2Is", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "5Is", "6Ia", "7Ia", "8Ia", "8Is", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "11Is", "12Ia", "13Ia", "14Ia", "14Is", "15Is", "15Ia"]),
        row(4, Table::FourBand, "TRS", &[(Trs, Gen::Default)], 6, 30, &["1Ra", "1Rs", "2Rs", "3Ra", "3Rs", "4Ra", "4Rs", "5Rs", "6Ra", "6Rs", "7Ra", "7Rs", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Rs", "12Rs", "12Ra", "13Ra", "13Rs", "14Ra", "14Rs", "15Rs", "15Ra", "1Is", "1Ia", "2Ia", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "6Ia", "6Is", "7Ia", "7Is", "8Ia", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "12Ia", "12Is", "13Ia", "13Is", "14Ia", "14Is", "15Ia", "15Is"]),
        row(4, Table::FourBand, "TRS (zeta=-1)", &[(Trs, Gen::ZetaMinus)], 6, 30, &["1Ra", "2Ra", "2Rs", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "5Rs", "6Ra", "7Ra", "8Ra", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "11Rs", "12Ra", "13Ra", "14Rs", "14Ra", "15Ra", "15Rs", "1Is", "2Ia", "2Is", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "5Is", "6Is", "7Is", "8Ia", "8Is", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "11Is", "12Is", "13Is", "14Ia", "14Is", "15Is", "15Ia"]),
        row(4, Table::FourBand, "TRSdag", &[(TrsDag, Gen::Default)], 6, 30, &["1Ra", "1Rs", "2Rs", "3Ra", "3Rs", "4Ra", "4Rs", "5Rs", "6Ra", "6Rs", "7Ra", "7Rs", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Rs", "12Ra", "12Rs", "13Ra", "13Rs", "14Ra", "14Rs", "15Rs", "15Ra", "1Ia", "1Is", "2Is", "3Ia", "3Is", "4Ia", "4Is", "6Ia", "6Is", "5Is", "7Ia", "7Is", "8Is", "9Ia", "9Is", "10Is", "10Ia", "11Is", "12Ia", "12Is", "13Ia", "13Is", "14Ia", "14Is", "15Is", "15Ia"]),
        row(4, Table::FourBand, "TRSdag (zeta=-1)", &[(TrsDag, Gen::ZetaMinus)], 6, 30, &["1Ra", "2Ra", "2Rs", "3Ra", "3Rs", "4Ra", "4Rs", "5Ra", "5Rs", "6Ra", "7Ra", "8Ra", "8Rs", "9Ra", "9Rs", "10Ra", "10Rs", "11Ra", "11Rs", "12Ra", "13Ra", "14Rs", "14Ra", "15Ra", "15Rs", "1Ia", "2Ia", "2Is", "3Ia", "3Is", "4Ia", "4Is", "5Ia", "5Is", "6Ia", "7Ia", "8Ia", "8Is", "9Ia", "9Is", "10Ia", "10Is", "11Ia", "11Is", "12Ia", "13Ia", "14Is", "14Ia", "15Ia", "15Is"]),
        row(4, Table::FourBand, "CS", &[(Cs, Gen::Default)], 3, 26, &["1R", "3R", "4R", "6R", "7R", "8R", "9R", "10R", "11R", "12R", "13R", "14R", "15R", "1I", "2I", "3I", "4I", "5I", "6I", "7I", "9I", "10I", "12I", "13I", "14I", "15I"]),
        row(4, Table::FourBand, "psCS", &[(PsCs, Gen::Default)], 4, 30, &["1R", "2R", "3R", "4R", "5R", "6R", "7R", "8R", "9R", "10R", "11R", "12R", "13R", "14R", "15R", "1I", "2I", "3I", "4I", "5I", "6I", "7I", "8I", "9I", "10I", "11I", "12I", "13I", "14I", "15I"]),
        row(4, Table::FourBand, "SLS", &[(Sls, Gen::Default)], 4, 26, &["1R", "3R", "4R", "6R", "7R", "8R", "9R", "10R", "11R", "12R", "13R", "14R", "15R", "1I", "3I", "4I", "6I", "7I", "8I", "9I", "10I", "11I", "12I", "13I", "14I", "15I"]),
        row(4, Table::FourBand, "I", &[(Inversion, Gen::Default)], 6, 30, &["1Ra", "2Rs", "3Ra", "4Ra", "5Rs", "6Ra", "7Ra", "8Rs", "9Ra", "10Ra", "11Rs", "12Ra", "13Rs", "14Rs", "15Rs", "1Is", "2Ia", "3Is", "4Is", "5Ia", "6Is", "7Is", "8Ia", "9Is", "10Is", "11Ia", "12Is", "13Ia", "14Ia", "15Ia"]),
        row(4, Table::FourBand, "psH", &[(PsH, Gen::Default)], 3, 26, &["1R", "3R", "4R", "6R", "7R", "8R", "9R", "10R", "11R", "12R", "13R", "14R", "15R", "1I", "2I", "3I", "4I", "5I", "6I", "7I", "9I", "10I", "12I", "13I", "14I", "15I"]),
        row(4, Table::FourBand, "P", &[(Parity, Gen::Default)], 6, 30, &["1Ra", "2Rs", "3Ra", "4Ra", "5Rs", "6Ra", "8Rs", "9Ra", "7Ra", "10Ra", "11Rs", "12Ra", "13Rs", "14Rs", "15Rs", "1Ia", "2Is", "3Ia", "4Ia", "5Is", "6Ia", "7Ia", "8Is", "9Ia", "10Ia", "11Is", "12Ia", "13Is", "14Is", "15Is"]),
        row(4, Table::FourBand, "PT", &[(Pt, Gen::Default)], 3, 26, &["1R", "2R", "3R", "4R", "5R", "6R", "7R", "8R", "9R", "10R", "11R", "12R", "13R", "14R", "15R", "3I", "4I", "1I", "6I", "7I", "9I", "10I", "12I", "13I", "14I", "15I"]),
        row(4, Table::FourBand, "CP", &[(Cp, Gen::Default)], 3, 26, &["1R", "3R", "4R", "6R", "7R", "9R", "10R", "12R", "13R", "14R", "15R", "1I", "2I", "3I", "4I", "5I", "6I", "7I", "8I", "9I", "10I", "11I", "12I", "13I", "14I", "15I"]),
        row(2, Table::PsHCombined, "psH+CS", &[(PsH, Gen::Default), (Cs, Gen::Default)], 1, 2, &["xR", "zI"]),
        row(2, Table::PsHCombined, "psH+SLS", &[(PsH, Gen::Default), (Sls, Gen::Default)], 1, 2, &["xR", "yI"]),
        row(2, Table::PsHCombined, "psH+I", &[(PsH, Gen::Default), (Inversion, Gen::Default)], 1, 3, &["xRs", "yIa", "zIs"]).corrected(&["xRa", "yIs", "zIa"]),
        row(2, Table::PsHCombined, "psH+PHS", &[(PsH, Gen::Default), (Phs, Gen::Default)], 1, 3, &["xRa", "yIs", "zIa"]),
        row(2, Table::PsHCombined, "psH+PHSdag", &[(PsH, Gen::Default), (PhsDag, Gen::Default)], 1, 3, &["xRa", "yIa", "zIs"]),
        row(2, Table::PsHCombined, "psH+TRS", &[(PsH, Gen::Default), (Trs, Gen::Default)], 1, 3, &["xRs", "yIs", "zIa"]),
        row(2, Table::PsHCombined, "psH+TRSdag", &[(PsH, Gen::Default), (TrsDag, Gen::Default)], 1, 3, &["xRs", "yIa", "zIs"]),
        row(2, Table::PsHCombined, "psH+PHS (zeta=-1)", &[(PsH, Gen::Default), (Phs, Gen::ZetaMinus)], 1, 3, &["xRs", "yIs", "zIs"]),
        row(2, Table::PsHCombined, "psH+PHSdag (zeta=-1)", &[(PsH, Gen::Default), (PhsDag, Gen::ZetaMinus)], 1, 3, &["xRa", "yIs", "zIa"]).corrected(&["xRs", "yIa", "zIa"]),
        row(2, Table::PsHCombined, "psH+TRS (zeta=-1)", &[(PsH, Gen::Default), (Trs, Gen::ZetaMinus)], 1, 3, &["xRa", "yIs", "zIs"]),
        row(2, Table::PsHCombined, "psH+TRSdag (zeta=-1)", &[(PsH, Gen::Default), (TrsDag, Gen::ZetaMinus)], 1, 3, &["xRa", "yIa", "zIa"]),
    ]
}

/// Outcome of checking one row against numerics.
#[derive(Debug, Clone, Serialize)]
pub struct RowCheck {
    pub name: String,
    pub n: usize,
    pub table: Table,
    pub expected_constraints: usize,
    pub observed_constraints: usize,
    pub expected_parameters: usize,
    pub observed_parameters: usize,
    pub expected_labels: Vec<String>,
    pub observed_labels: Vec<String>,
    pub labels_match: bool,
    /// The printed labels differ from the set checked against.
    pub printed_corrected: bool,
    pub pass: bool,
}

pub fn check_row(r: &TableRow, draws: usize, k_samples: usize, seed: u64) -> Result<RowCheck, String> {
    let ops = r.operators().map_err(|e| e.to_string())?;
    let constraints = predicted_constraints(&r.kinds(), r.n).map_err(|e| e.to_string())?.count;
    let params = surviving_parameters(&ops, r.n, draws, k_samples, seed).map_err(|e| e.to_string())?;
    let expected = r.expected_slots()?;
    let labels_match = expected == params.slots;
    let observed_parameters = params.count();
    Ok(RowCheck {
        name: r.name.to_string(),
        n: r.n,
        table: r.table,
        expected_constraints: r.constraints,
        observed_constraints: constraints,
        expected_parameters: r.parameters,
        observed_parameters,
        expected_labels: r.expected_labels().iter().map(|s| s.to_string()).collect(),
        observed_labels: params.labels(),
        labels_match,
        printed_corrected: r.corrected.is_some(),
        pass: labels_match && constraints == r.constraints && observed_parameters == r.parameters,
    })
}
