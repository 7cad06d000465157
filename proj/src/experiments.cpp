// implemented later in this change series
