"""Monte-Carlo estimation, experiment sweeps and plotting."""
