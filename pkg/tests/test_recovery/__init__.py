# recovery tests package
