/// Whether the best objective has failed to improve by more than `delta` over
/// the last `patience` consecutive entries of `history`.
///
/// `history[k]` is the best-so-far objective after step `k`; an entry counts
/// as an improvement only if it beats the running best by more than `delta`.
pub fn early_stop_check(history: &[f64], patience: usize, delta: f64) -> bool {
    let Some((&first, rest)) = history.split_first() else {
        return false;
    };
    let mut best = first;
    let mut stale = 0;
    for &value in rest {
        if best - value > delta {
            best = value;
            stale = 0;
        } else {
            stale += 1;
        }
    }
    stale >= patience
}
