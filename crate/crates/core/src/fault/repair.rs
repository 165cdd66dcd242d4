/// Mean of the finite entries within `window` positions of `index`
/// (excluding `index` itself), or 0 when there are none.
pub fn repair_neighbor_average(values: &[f64], index: usize, window: usize) -> f64 {
    let window = window.max(1);
    let lo = index.saturating_sub(window);
    let hi = (index + window).min(values.len().saturating_sub(1));
    let (sum, count) = (lo..=hi)
        .filter(|&k| k != index)
        .filter_map(|k| values.get(k).copied().filter(|v| v.is_finite()))
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}
