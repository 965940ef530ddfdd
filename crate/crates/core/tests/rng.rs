use qroute::rng::*;
use rand_chacha::ChaCha8Rng;
use rand::Rng;

#[test]
fn streams_are_independent_and_reproducible() {
    let draw = |mut r: ChaCha8Rng| (0..4).map(|_| r.gen::<u32>()).collect::<Vec<_>>();
    let a = draw(stream_rng(7, Stream::Graph));
    let b = draw(stream_rng(7, Stream::Graph));
    let c = draw(stream_rng(7, Stream::Cover));
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_ne!(indexed_rng(7, Stream::Tracking, 0).gen::<u64>(), indexed_rng(7, Stream::Tracking, 1).gen::<u64>());
}
