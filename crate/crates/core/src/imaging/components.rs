use super::raster::BinaryMask;

/// 4-connected component labels; background is 0, components count from 1.
pub fn label_components(mask: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let mut labels = vec![0u32; bits.len()];
    // sizes[0] is unused so that sizes[label] lines up
    let mut sizes = vec![0usize];
    let mut stack = Vec::new();

    for start in 0..bits.len() {
        if !bits[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32;
        let mut size = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            size += 1;
            let (x, y) = (idx % w, idx / w);
            let mut visit = |n: usize| {
                if bits[n] && labels[n] == 0 {
                    labels[n] = label;
                    stack.push(n);
                }
            };
            if x > 0 {
                visit(idx - 1);
            }
            if x + 1 < w {
                visit(idx + 1);
            }
            if y > 0 {
                visit(idx - w);
            }
            if y + 1 < h {
                visit(idx + w);
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Drops 4-connected components smaller than `min_size` pixels.
pub fn remove_small_components(mask: &BinaryMask, min_size: usize) -> BinaryMask {
    let (labels, sizes) = label_components(mask);
    let bits = labels
        .iter()
        .map(|&l| l != 0 && sizes[l as usize] >= min_size)
        .collect();
    BinaryMask::new(mask.width(), mask.height(), bits).expect("same dimensions")
}
