"""Self-testing of the distributed state and measurements via swap SDPs."""
