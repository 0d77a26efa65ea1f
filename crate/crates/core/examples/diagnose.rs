// Scratch diagnosis: fixture hunt for fidelity and size-monotonicity.

use vqmark::codebook::{train_sofm, SofmParams};
use vqmark::image::{extract_channel, to_blocks};
use vqmark::metrics;
use vqmark::partition::build_partition;
use vqmark::testimg::{demo_watermark, synthetic_natural};
use vqmark::vqcodec::{decode_image, encode_image};
use vqmark::watermark::{embed, EmbedKey};

fn main() {
    let wm = demo_watermark(64);
    let key = EmbedKey(31337);
    for host_seed in [2024u64, 101] {
        let host = synthetic_natural(512, 512, 3, host_seed);
        let blocks = to_blocks(&extract_channel(&host, 0).unwrap(), 4)
            .unwrap()
            .blocks;
        for seed in 1u64..=8 {
            print!("host {host_seed} seed {seed}:");
            let mut prev = 0.0;
            let mut mono = true;
            for size in [32usize, 64, 128, 256] {
                let cb =
                    train_sofm(&blocks, &SofmParams::for_size(size, seed).unwrap()).unwrap();
                let pc = build_partition(&cb).unwrap();
                let enc = encode_image(&host, &cb).unwrap();
                let marked = decode_image(&embed(&enc, &pc, &wm, key).unwrap(), &cb).unwrap();
                let p = metrics::psnr(&host, &marked).unwrap();
                if p < prev - 0.3 {
                    mono = false;
                }
                prev = p;
                print!(" {size}:{p:6.2}");
            }
            println!("  monotone(0.3): {mono}");
        }
    }
}
