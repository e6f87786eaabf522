"""Heights of limit mixed Hodge structures and regularized Neron pairings."""
