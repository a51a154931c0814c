use super::downstream::TradeoffPoint;

/// `a` dominates `b`: no worse on both objectives (lower Δ_DP, higher
/// accuracy) and strictly better on one.
pub fn dominates(a: &TradeoffPoint, b: &TradeoffPoint) -> bool {
    let no_worse = a.delta_dp_mean <= b.delta_dp_mean && a.accuracy_mean >= b.accuracy_mean;
    let better = a.delta_dp_mean < b.delta_dp_mean || a.accuracy_mean > b.accuracy_mean;
    no_worse && better
}

/// Non-dominated subset, ties kept, sorted by Δ_DP ascending (then accuracy
/// descending).
pub fn pareto_front(points: &[TradeoffPoint]) -> Vec<TradeoffPoint> {
    let mut front: Vec<TradeoffPoint> = points
        .iter()
        .filter(|p| !points.iter().any(|q| dominates(q, p)))
        .cloned()
        .collect();
    front.sort_by(|a, b| {
        a.delta_dp_mean
            .total_cmp(&b.delta_dp_mean)
            .then(b.accuracy_mean.total_cmp(&a.accuracy_mean))
    });
    front
}
