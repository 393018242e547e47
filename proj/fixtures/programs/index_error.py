def last_score(scores):
    return scores[len(scores)]


last_score([3, 5, 8])
