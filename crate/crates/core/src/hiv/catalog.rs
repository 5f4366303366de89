use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One treatment (a drug combination) and its tariff data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Treatment {
    pub name: String,
    /// Baseline branded cost per semester, in euros.
    pub medcost_b: f64,
    /// Semester of the branded marketing authorization (may precede the simulation start).
    pub ammt: f64,
    pub has_generic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentCatalog {
    pub treatments: Vec<Treatment>,
}

impl TreatmentCatalog {
    pub fn new(treatments: Vec<Treatment>) -> Result<Self> {
        let c = Self { treatments };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.treatments.is_empty() {
            return Err(Error::config("treatment catalog is empty"));
        }
        for (i, t) in self.treatments.iter().enumerate() {
            if !(t.medcost_b > 0.0 && t.medcost_b.is_finite()) {
                return Err(Error::config(format!("treatment '{}' needs a positive cost", t.name)));
            }
            if !t.ammt.is_finite() {
                return Err(Error::config(format!("treatment '{}' has a non-finite AMMT", t.name)));
            }
            if self.treatments[..i].iter().any(|o| o.name == t.name) {
                return Err(Error::config(format!("duplicate treatment '{}'", t.name)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.treatments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.treatments.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.treatments.iter().map(|t| t.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.treatments
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::Schema(format!("treatment '{name}' is not in the catalog")))
    }
}
