//! Instance generation.

use std::path::Path;

use clap::ValueEnum;
use qzk_core::circuits::{bell_prep, epr_prep, random_pair, serialize_pair, Circuit, Gate, StatePrepPair};

use crate::error::{CliError, CliResult};
use crate::output::write_file;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Template {
    /// Independent random circuits, one seed per pair.
    Random,
    /// Two Bell-pair preparations (n = 2, r = 1).
    Bell,
    /// Bell pair against |00> (n = 2, r = 1).
    BellProduct,
    /// `r` EPR pairs on both sides (n = 2r).
    Epr,
    /// |0...0> against X on the first output qubit.
    Orthogonal,
}

pub fn make_pair(template: Template, n: usize, r: usize, depth: usize, seed: u64) -> CliResult<StatePrepPair> {
    let fixed = |want_n: usize, want_r: usize| -> CliResult<()> {
        if (n, r) != (want_n, want_r) {
            return Err(CliError::Invalid(format!(
                "template {template:?} needs n = {want_n}, r = {want_r}; got n = {n}, r = {r}"
            )));
        }
        Ok(())
    };
    let pair = match template {
        Template::Random => random_pair(n, r, depth, seed)?,
        Template::Bell => {
            fixed(2, 1)?;
            StatePrepPair::new(bell_prep(), bell_prep(), "bell")?
        }
        Template::BellProduct => {
            fixed(2, 1)?;
            StatePrepPair::new(bell_prep(), Circuit::empty(2, 1)?, "bell-product")?
        }
        Template::Epr => {
            fixed(2 * r, r)?;
            StatePrepPair::new(epr_prep(r)?, epr_prep(r)?, format!("epr-{r}"))?
        }
        Template::Orthogonal => {
            let zero = Circuit::empty(n, r)?;
            if r == 0 {
                return Err(CliError::Invalid("orthogonal template needs r >= 1".into()));
            }
            StatePrepPair::new(zero.clone(), zero.with(Gate::x(0)), "orthogonal")?
        }
    };
    Ok(pair)
}

pub struct GenArgs {
    pub n: usize,
    pub r: usize,
    pub depth: usize,
    pub count: usize,
    pub template: Template,
    pub seed: u64,
}

/// Writes `pair-NNNN.json` files into `dir`; pair `i` uses seed `seed + i`.
pub fn run(args: &GenArgs, dir: &Path) -> CliResult<Vec<std::path::PathBuf>> {
    if args.count == 0 || args.count > 100_000 {
        return Err(CliError::Invalid(format!("count = {} must lie in 1..=100000", args.count)));
    }
    let mut written = Vec::with_capacity(args.count);
    for i in 0..args.count {
        let seed = args.seed.wrapping_add(i as u64);
        let pair = make_pair(args.template, args.n, args.r, args.depth, seed)?;
        let path = dir.join(format!("pair-{i:04}.json"));
        write_file(&path, &(serialize_pair(&pair) + "\n"))?;
        written.push(path);
    }
    log::info!("wrote {} pair files to {}", written.len(), dir.display());
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_check_shapes() {
        assert!(make_pair(Template::Bell, 2, 1, 0, 0).is_ok());
        assert_eq!(make_pair(Template::Bell, 3, 1, 0, 0).unwrap_err().code(), 2);
        assert!(make_pair(Template::Epr, 4, 2, 0, 0).is_ok());
        assert_eq!(make_pair(Template::Random, 15, 1, 5, 0).unwrap_err().code(), 2);
    }
}
