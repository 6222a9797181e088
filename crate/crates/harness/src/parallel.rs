/// `(0..count).map(f)` on scoped worker threads; output order is index order
/// regardless of scheduling.
pub fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = std::thread::available_parallelism()
        .map_or(1, |w| w.get())
        .clamp(1, count.max(1));
    let chunk = count.div_ceil(workers).max(1);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    std::thread::scope(|s| {
        for (j, part) in slots.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || {
                for (i, slot) in part.iter_mut().enumerate() {
                    *slot = Some(f(j * chunk + i));
                }
            });
        }
    });
    slots
        .into_iter()
        .map(|x| x.expect("every slot filled"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_index_order() {
        assert_eq!(
            par_map(37, |i| i * i),
            (0..37).map(|i| i * i).collect::<Vec<_>>()
        );
        assert!(par_map(0, |i| i).is_empty());
    }
}
