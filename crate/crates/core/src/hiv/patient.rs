//! Patient state and the tabular layouts used for baselines and histories.

use super::catalog::TreatmentCatalog;
use crate::dataset::{Column, ColumnSchema, MixedDataset};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Covariates of one simulated patient. Binary indicators are 0/1, ARN is
/// 0..=2 and CREA is 1..=3. `death` is 1 while the patient is alive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientState {
    pub sex: u8,
    /// Months.
    pub age: f64,
    pub bc: u8,
    pub conta: u8,
    pub vihs: u8,
    /// Months since diagnosis.
    pub vihd: f64,
    /// Months on the current treatment.
    pub treatd: f64,
    pub arn: u8,
    pub heart: u8,
    pub diab: u8,
    pub ir: u8,
    pub crea: u8,
    pub death: u8,
    pub treatment: usize,
    pub on_generic: bool,
}

impl PatientState {
    pub fn is_alive(&self) -> bool {
        self.death == 1
    }
}

/// Renal failure indicator derived from creatinine clearance.
pub fn renal_failure(crea: u8, invert: bool) -> u8 {
    let ir = matches!(crea, 1 | 2);
    u8::from(ir != invert)
}

/// Column order of a transition row: state at the start of the period
/// followed by the values already drawn for the end of the period.
pub const TRANSITION_COLUMNS: [&str; 17] = [
    "SEX", "AGE", "BC", "CONTA", "VIHS", "VIHD", "TREATD", "ARN", "HEART", "DIAB", "CREA", "IR", "VIHS_NEXT", "ARN_NEXT",
    "HEART_NEXT", "DIAB_NEXT", "CREA_NEXT",
];

pub(crate) mod col {
    pub const SEX: usize = 0;
    pub const AGE: usize = 1;
    pub const BC: usize = 2;
    pub const CONTA: usize = 3;
    pub const VIHS: usize = 4;
    pub const VIHD: usize = 5;
    pub const TREATD: usize = 6;
    pub const ARN: usize = 7;
    pub const HEART: usize = 8;
    pub const DIAB: usize = 9;
    pub const CREA: usize = 10;
    pub const IR: usize = 11;
    pub const VIHS_NEXT: usize = 12;
    pub const ARN_NEXT: usize = 13;
    pub const HEART_NEXT: usize = 14;
    pub const DIAB_NEXT: usize = 15;
    pub const CREA_NEXT: usize = 16;
}

/// Transition-row values as model inputs: categorical columns hold category
/// codes (CREA is shifted to 0..=2), durations hold months.
pub type TransitionRow = [f64; 17];

/// Start-of-period part of a transition row; the `_NEXT` slots are zero.
pub fn start_row(s: &PatientState) -> TransitionRow {
    let mut r = [0.0; 17];
    r[col::SEX] = s.sex.into();
    r[col::AGE] = s.age;
    r[col::BC] = s.bc.into();
    r[col::CONTA] = s.conta.into();
    r[col::VIHS] = s.vihs.into();
    r[col::VIHD] = s.vihd;
    r[col::TREATD] = s.treatd;
    r[col::ARN] = s.arn.into();
    r[col::HEART] = s.heart.into();
    r[col::DIAB] = s.diab.into();
    r[col::CREA] = f64::from(s.crea) - 1.0;
    r[col::IR] = s.ir.into();
    r
}

fn binary(name: &str) -> ColumnSchema {
    ColumnSchema::categorical(name, ["0", "1"])
}

fn arn(name: &str) -> ColumnSchema {
    ColumnSchema::categorical(name, ["0", "1", "2"])
}

fn crea(name: &str) -> ColumnSchema {
    ColumnSchema::categorical(name, ["1", "2", "3"])
}

/// Schema of a baseline cohort file.
pub fn baseline_schema(catalog: &TreatmentCatalog) -> Vec<ColumnSchema> {
    vec![
        binary("SEX"),
        ColumnSchema::continuous("AGE"),
        binary("BC"),
        binary("CONTA"),
        binary("VIHS"),
        ColumnSchema::continuous("VIHD"),
        ColumnSchema::continuous("TREATD"),
        arn("ARN"),
        binary("HEART"),
        binary("DIAB"),
        crea("CREA"),
        ColumnSchema::categorical("TREAT", catalog.names()),
    ]
}

/// Schema of a calibration history: one row per patient and period.
pub fn history_schema(catalog: &TreatmentCatalog) -> Vec<ColumnSchema> {
    vec![
        binary("SEX"),
        ColumnSchema::continuous("AGE"),
        binary("BC"),
        binary("CONTA"),
        binary("VIHS"),
        ColumnSchema::continuous("VIHD"),
        ColumnSchema::continuous("TREATD"),
        arn("ARN"),
        binary("HEART"),
        binary("DIAB"),
        crea("CREA"),
        binary("IR"),
        ColumnSchema::categorical("TREAT", catalog.names()),
        binary("VIHS_NEXT"),
        arn("ARN_NEXT"),
        binary("HEART_NEXT"),
        binary("DIAB_NEXT"),
        crea("CREA_NEXT"),
        ColumnSchema::categorical("TREAT_NEXT", catalog.names()),
        binary("DEATH_NEXT"),
    ]
}

fn small_int(data: &MixedDataset, row: usize, col: usize, lo: u8, hi: u8) -> Result<u8> {
    let name = &data.schema()[col].name;
    let label = data.label(row, col);
    let v: u8 = label.parse().map_err(|_| Error::Ingest {
        row: row + 1,
        column: name.clone(),
        message: format!("expected an integer code, got '{label}'"),
    })?;
    if !(lo..=hi).contains(&v) {
        return Err(Error::Ingest {
            row: row + 1,
            column: name.clone(),
            message: format!("value {v} outside {lo}..={hi}"),
        });
    }
    Ok(v)
}

/// Reads alive patients from a baseline table. IR is derived from CREA; an
/// IR column, if present, is ignored.
pub fn patients_from_dataset(data: &MixedDataset, catalog: &TreatmentCatalog, invert_ir: bool) -> Result<Vec<PatientState>> {
    let idx = |name: &str| data.index_of(name);
    let (sex, age, bc, conta, vihs, vihd, treatd, arn, heart, diab, crea, treat) = (
        idx("SEX")?,
        idx("AGE")?,
        idx("BC")?,
        idx("CONTA")?,
        idx("VIHS")?,
        idx("VIHD")?,
        idx("TREATD")?,
        idx("ARN")?,
        idx("HEART")?,
        idx("DIAB")?,
        idx("CREA")?,
        idx("TREAT")?,
    );
    for j in [age, vihd, treatd] {
        if data.schema()[j].is_categorical() {
            return Err(Error::Schema(format!("column '{}' must be continuous", data.schema()[j].name)));
        }
    }
    let mut out = Vec::with_capacity(data.n_rows());
    for r in 0..data.n_rows() {
        let duration = |j: usize| {
            let v = data.value(r, j);
            if v < 0.0 {
                Err(Error::Ingest {
                    row: r + 1,
                    column: data.schema()[j].name.clone(),
                    message: format!("durations must be nonnegative, got {v}"),
                })
            } else {
                Ok(v)
            }
        };
        let c = small_int(data, r, crea, 1, 3)?;
        out.push(PatientState {
            sex: small_int(data, r, sex, 0, 1)?,
            age: duration(age)?,
            bc: small_int(data, r, bc, 0, 1)?,
            conta: small_int(data, r, conta, 0, 1)?,
            vihs: small_int(data, r, vihs, 0, 1)?,
            vihd: duration(vihd)?,
            treatd: duration(treatd)?,
            arn: small_int(data, r, arn, 0, 2)?,
            heart: small_int(data, r, heart, 0, 1)?,
            diab: small_int(data, r, diab, 0, 1)?,
            ir: renal_failure(c, invert_ir),
            crea: c,
            death: 1,
            treatment: catalog.index_of(&data.label(r, treat))?,
            on_generic: false,
        });
    }
    if out.is_empty() {
        return Err(Error::InsufficientData("baseline cohort is empty".into()));
    }
    Ok(out)
}

/// Writes patients back into the baseline layout.
pub fn patients_to_dataset(patients: &[PatientState], catalog: &TreatmentCatalog) -> Result<MixedDataset> {
    let code = |f: fn(&PatientState) -> u8| Column::Categorical(patients.iter().map(|p| u32::from(f(p))).collect());
    let cont = |f: fn(&PatientState) -> f64| Column::Continuous(patients.iter().map(f).collect());
    MixedDataset::new(
        baseline_schema(catalog),
        vec![
            code(|p| p.sex),
            cont(|p| p.age),
            code(|p| p.bc),
            code(|p| p.conta),
            code(|p| p.vihs),
            cont(|p| p.vihd),
            cont(|p| p.treatd),
            code(|p| p.arn),
            code(|p| p.heart),
            code(|p| p.diab),
            code(|p| p.crea - 1),
            Column::Categorical(patients.iter().map(|p| p.treatment as u32).collect()),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hiv::catalog::Treatment;

    fn catalog() -> TreatmentCatalog {
        TreatmentCatalog::new(vec![
            Treatment { name: "A".into(), medcost_b: 10.0, ammt: 0.0, has_generic: true },
            Treatment { name: "B".into(), medcost_b: 20.0, ammt: 0.0, has_generic: false },
        ])
        .unwrap()
    }

    #[test]
    fn ir_rule_as_printed_and_inverted() {
        assert_eq!(renal_failure(1, false), 1);
        assert_eq!(renal_failure(2, false), 1);
        assert_eq!(renal_failure(3, false), 0);
        assert_eq!(renal_failure(3, true), 1);
        assert_eq!(renal_failure(1, true), 0);
    }

    #[test]
    fn dataset_round_trip() {
        let p = PatientState {
            sex: 1,
            age: 480.0,
            bc: 0,
            conta: 1,
            vihs: 0,
            vihd: 60.0,
            treatd: 12.0,
            arn: 2,
            heart: 0,
            diab: 1,
            ir: 0,
            crea: 3,
            death: 1,
            treatment: 1,
            on_generic: false,
        };
        let cat = catalog();
        let data = patients_to_dataset(std::slice::from_ref(&p), &cat).unwrap();
        let back = patients_from_dataset(&data, &cat, false).unwrap();
        assert_eq!(back, vec![p]);
        assert_eq!(start_row(&back[0])[col::CREA], 2.0);
    }

    #[test]
    fn unknown_treatment_is_a_data_error() {
        let cat = catalog();
        let data = patients_to_dataset(
            &[PatientState {
                sex: 0,
                age: 400.0,
                bc: 0,
                conta: 0,
                vihs: 0,
                vihd: 1.0,
                treatd: 1.0,
                arn: 0,
                heart: 0,
                diab: 0,
                ir: 1,
                crea: 1,
                death: 1,
                treatment: 0,
                on_generic: false,
            }],
            &cat,
        )
        .unwrap();
        let smaller = TreatmentCatalog::new(vec![cat.treatments[1].clone()]).unwrap();
        assert!(patients_from_dataset(&data, &smaller, false).is_err());
    }
}
