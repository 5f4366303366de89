use crate::dataset::MixedDataset;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestKind {
    ChiSquare,
    StudentT,
    WelchT,
}

/// Two-sample t-test flavour for continuous covariates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestVariant {
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationTest {
    pub kind: TestKind,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// p-value of the association between `covariate` and a binary `outcome`:
/// Pearson chi-square for categorical covariates, pooled two-sample t otherwise.
pub fn association_pvalue(data: &MixedDataset, covariate: &str, outcome: &str) -> Result<f64> {
    Ok(association_test(data, covariate, outcome, TTestVariant::Pooled)?.p_value)
}

pub fn association_test(data: &MixedDataset, covariate: &str, outcome: &str, variant: TTestVariant) -> Result<AssociationTest> {
    let jo = data.index_of(outcome)?;
    let jc = data.index_of(covariate)?;
    let os = &data.schema()[jo];
    if !os.is_categorical() || os.n_categories() != 2 {
        return Err(Error::Schema(format!("outcome '{outcome}' must be binary categorical")));
    }
    let groups: Vec<usize> = (0..data.n_rows()).map(|r| data.value(r, jo) as usize).collect();
    let values: Vec<f64> = (0..data.n_rows()).map(|r| data.value(r, jc)).collect();
    if data.schema()[jc].is_categorical() {
        chi_square(&values, &groups, data.schema()[jc].n_categories(), covariate)
    } else {
        t_test(&values, &groups, variant, covariate)
    }
}

fn chi_square(codes: &[f64], groups: &[usize], levels: usize, name: &str) -> Result<AssociationTest> {
    let mut table = vec![[0.0f64; 2]; levels];
    for (&c, &g) in codes.iter().zip(groups) {
        table[c as usize][g] += 1.0;
    }
    // Categories absent from the sample carry no information.
    table.retain(|r| r[0] + r[1] > 0.0);
    let col = [table.iter().map(|r| r[0]).sum::<f64>(), table.iter().map(|r| r[1]).sum::<f64>()];
    let n = col[0] + col[1];
    if table.len() < 2 || col[0] == 0.0 || col[1] == 0.0 {
        return Err(Error::UndefinedTest(format!("'{name}' contingency table has a single row or column")));
    }
    let mut stat = 0.0;
    let mut sparse = false;
    for r in &table {
        let row = r[0] + r[1];
        for g in 0..2 {
            let e = row * col[g] / n;
            sparse |= e < 5.0;
            stat += (r[g] - e).powi(2) / e;
        }
    }
    if sparse {
        log::warn!("chi-square for '{name}' has expected counts below 5");
    }
    let df = (table.len() - 1) as f64;
    let p = ChiSquared::new(df).map_err(|e| Error::Numerical(e.to_string()))?.sf(stat);
    Ok(AssociationTest {
        kind: TestKind::ChiSquare,
        statistic: stat,
        df,
        p_value: p.clamp(0.0, 1.0),
    })
}

fn t_test(values: &[f64], groups: &[usize], variant: TTestVariant, name: &str) -> Result<AssociationTest> {
    let mut n = [0.0f64; 2];
    let mut sum = [0.0f64; 2];
    for (&v, &g) in values.iter().zip(groups) {
        n[g] += 1.0;
        sum[g] += v;
    }
    if n[0] < 2.0 || n[1] < 2.0 {
        return Err(Error::UndefinedTest(format!("'{name}' needs at least two observations per outcome group")));
    }
    let mean = [sum[0] / n[0], sum[1] / n[1]];
    let mut ss = [0.0f64; 2];
    for (&v, &g) in values.iter().zip(groups) {
        ss[g] += (v - mean[g]).powi(2);
    }
    let var = [ss[0] / (n[0] - 1.0), ss[1] / (n[1] - 1.0)];
    let diff = mean[1] - mean[0];
    let (se2, df, kind) = match variant {
        TTestVariant::Pooled => {
            let df = n[0] + n[1] - 2.0;
            let pooled = (ss[0] + ss[1]) / df;
            (pooled * (1.0 / n[0] + 1.0 / n[1]), df, TestKind::StudentT)
        }
        TTestVariant::Welch => {
            let a = var[0] / n[0];
            let b = var[1] / n[1];
            let df = (a + b).powi(2) / (a * a / (n[0] - 1.0) + b * b / (n[1] - 1.0));
            (a + b, df, TestKind::WelchT)
        }
    };
    if se2.is_nan() || se2 <= 0.0 {
        return Err(Error::UndefinedTest(format!("'{name}' has zero variance within outcome groups")));
    }
    let t = diff / se2.sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(AssociationTest {
        kind,
        statistic: t,
        df,
        p_value: (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0),
    })
}
