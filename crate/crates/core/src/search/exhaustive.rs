use crate::error::{Error, Result};
use crate::objective::{EvaluationResult, Evaluator, Source};
use crate::structure::{num_pairs, TNStructure};

/// Largest box the brute-force oracle will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 10_000;

/// Evaluates every rank vector in `[1, r_max]^M` (lexicographic order, last
/// variable fastest) and returns the best under the shared tie-break.
pub fn exhaustive_search(evaluator: &Evaluator<'_>, order: usize, r_max: usize) -> Result<EvaluationResult> {
    if r_max < 1 {
        return Err(Error::Config("r_max must be >= 1".into()));
    }
    let vars = num_pairs(order);
    let size = (r_max as u128).checked_pow(vars as u32).unwrap_or(u128::MAX);
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            size,
            limit: EXHAUSTIVE_LIMIT,
        });
    }

    let mut ranks = vec![1usize; vars];
    let mut best: Option<EvaluationResult> = None;
    loop {
        let structure = TNStructure::new(order, ranks.clone())?;
        let result = evaluator.evaluate(&structure, Source::Enumeration)?.into_result();
        if best.as_ref().is_none_or(|b| result.better_than(b)) {
            best = Some(result);
        }
        // Odometer increment.
        let mut k = vars;
        loop {
            if k == 0 {
                return Ok(best.expect("non-empty box"));
            }
            k -= 1;
            if ranks[k] < r_max {
                ranks[k] += 1;
                break;
            }
            ranks[k] = 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::generate_synthetic;
    use crate::objective::FitConfig;

    fn fit() -> FitConfig {
        FitConfig {
            max_iters: 100,
            ..FitConfig::default()
        }
    }

    #[test]
    fn box_sizes() {
        let planted = TNStructure::new(2, vec![1]).unwrap();
        let ds = generate_synthetic(&[3, 3], &planted, 1, 0.0, 0).unwrap();
        let ev = Evaluator::new(&ds, 10.0, fit()).unwrap();
        exhaustive_search(&ev, 2, 2).unwrap();
        assert_eq!(ev.evaluations(), 2);

        let planted = TNStructure::all_ones(3).unwrap();
        let ds = generate_synthetic(&[2, 2, 2], &planted, 1, 0.0, 0).unwrap();
        let ev = Evaluator::new(&ds, 10.0, fit()).unwrap();
        exhaustive_search(&ev, 3, 2).unwrap();
        assert_eq!(ev.evaluations(), 8);
        let order: Vec<Vec<usize>> = ev.cache().history().iter().map(|r| r.structure.ranks().to_vec()).collect();
        assert_eq!(order[0], vec![1, 1, 1]);
        assert_eq!(order[1], vec![1, 1, 2]);
        assert_eq!(order[7], vec![2, 2, 2]);
    }

    #[test]
    fn returns_the_minimum() {
        let planted = TNStructure::new(3, vec![2, 1, 1]).unwrap();
        let ds = generate_synthetic(&[3, 3, 3], &planted, 1, 0.0, 2).unwrap();
        let ev = Evaluator::new(&ds, 10.0, fit()).unwrap();
        let best = exhaustive_search(&ev, 3, 2).unwrap();
        assert!(ev.cache().history().iter().all(|r| r.objective >= best.objective));
    }

    #[test]
    fn guard_rejects_large_boxes() {
        let planted = TNStructure::all_ones(4).unwrap();
        let ds = generate_synthetic(&[2, 2, 2, 2], &planted, 1, 0.0, 0).unwrap();
        let ev = Evaluator::new(&ds, 10.0, fit()).unwrap();
        // 5^6 = 15625 > 10000
        assert!(matches!(exhaustive_search(&ev, 4, 5), Err(Error::SearchSpaceTooLarge { .. })));
        assert_eq!(ev.evaluations(), 0);
    }
}
